#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace promptlit {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument did not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A file or directory could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

namespace text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
bool is_blank(std::string_view s);

/// Lower-cased alphanumeric runs; apostrophes inside a word are kept ("i'm").
std::vector<std::string> tokenize(std::string_view s);

/// Whitespace-separated word count.
std::size_t word_count(std::string_view s);

/// Light suffix stripper used for keyword matching ("cells" -> "cell").
std::string stem(std::string_view word);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace text
}  // namespace promptlit
