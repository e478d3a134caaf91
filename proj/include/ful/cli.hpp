#pragma once

#include <string>
#include <vector>

namespace ful {

/** Run the `ful` tool on argv[1..]-style arguments.
 *
 *  Exit codes: 0 success; 1 usage or configuration errors (unknown flags,
 *  unreadable or ill-formed inputs); 2 domain errors (divergence, degenerate
 *  sample sets, stalled quadrature) with the error report still written when
 *  a report path was given.  FUL_LOG in {error, info, debug} controls stderr
 *  verbosity.
 */
int cli_run(std::vector<std::string> args);

}  // namespace ful
