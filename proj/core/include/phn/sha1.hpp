#pragma once

#include <string>
#include <string_view>

namespace phn {

/// Lowercase hex SHA-1 digest.
std::string sha1_hex(std::string_view data);

/// Git-style blob hash: sha1("blob <len>\0" + content).
std::string git_blob_hash(std::string_view content);

}  // namespace phn
