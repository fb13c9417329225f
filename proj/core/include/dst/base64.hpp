#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dst {

std::string base64_encode(const std::vector<uint8_t>& data);
std::vector<uint8_t> base64_decode(const std::string& text);

std::string base64_encode_f64(const std::vector<double>& values);
std::vector<double> base64_decode_f64(const std::string& text);

}  // namespace dst
