#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace sigpath::cli {

/// Runs one command line (args[0] is the program name). Returns the process
/// exit code: 0 on success, 1 on runtime errors, 2 on usage errors. Errors
/// produce a single "error: ..." line on `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// "1..4" or "1,3,5" (mixed allowed: "1..3,6").
std::vector<std::size_t> parse_index_list(std::string_view text);
/// Comma-separated reals.
std::vector<double> parse_real_list(std::string_view text);

/// --jobs value, else SIGPATH_JOBS, else hardware concurrency.
std::size_t resolve_jobs(long long flag);

}  // namespace sigpath::cli
