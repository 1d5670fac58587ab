#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace wikityper::cli {

// Exit codes: 0 success, 1 usage or validation error, 2 I/O or network failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);

}  // namespace wikityper::cli
