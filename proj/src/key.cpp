#include "ambislam/key.hpp"

#include <charconv>
#include <stdexcept>

namespace ambislam {

std::string Key::str() const { return (isRobot() ? "x" : "l") + std::to_string(index); }

Key Key::parse(std::string_view text) {
  if (text.size() < 2 || (text[0] != 'x' && text[0] != 'l')) {
    throw std::invalid_argument("malformed key '" + std::string(text) + "'");
  }
  std::uint32_t idx = 0;
  const char* first = text.data() + 1;
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, idx);
  if (ec != std::errc{} || ptr != last) throw std::invalid_argument("malformed key '" + std::string(text) + "'");
  return Key{text[0] == 'x' ? Kind::Robot : Kind::Landmark, idx};
}

}  // namespace ambislam
