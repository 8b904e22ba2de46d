#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace atelier {

uint64_t fnv1a64(std::string_view bytes);
std::string fnv1a64_hex(std::string_view bytes);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

std::string join(const std::vector<std::string>& parts, const std::string& sep);
std::string trim(std::string_view s);

std::string base64_encode(const unsigned char* data, size_t len);

}  // namespace atelier
