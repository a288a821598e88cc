#ifndef SEG_UTF8_HPP
#define SEG_UTF8_HPP

#include <string>
#include <string_view>

namespace seg::utf8 {

// Strict decode; throws seg::IoError on malformed input (overlong forms,
// surrogates, truncation, out-of-range scalars). `where` names the source in
// the error message.
std::u32string decode(std::string_view bytes, std::string_view where = "input");

std::string encode(std::u32string_view text);

void append(std::string& out, char32_t cp);

}  // namespace seg::utf8

#endif  // SEG_UTF8_HPP
