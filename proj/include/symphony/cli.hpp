#pragma once

#include <string>
#include <vector>

namespace symphony {

/// Runs one pipeline stage (simulate / fit / deconvolve / normalize /
/// evaluate / export-grn). Returns the process exit status: 0 success,
/// 1 usage error, 2 data error, 3 numerical failure.
int cli_dispatch(const std::vector<std::string>& args);

}  // namespace symphony
