#ifndef SYMDEF_ERROR_HPP
#define SYMDEF_ERROR_HPP

#include <stdexcept>
#include <string>
#include <utility>

namespace symdef {

// All fatal conditions surface as Error. The code is a stable,
// machine-parsable identifier; the CLI prints it verbatim.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

namespace errc {
inline constexpr const char* kParse = "E_PARSE";          // malformed input file
inline constexpr const char* kInvariant = "E_INVARIANT";  // data model violation
inline constexpr const char* kIo = "E_IO";                // file not readable/writable
inline constexpr const char* kBoundary = "E_BOUNDARY";    // offset not on a token boundary
inline constexpr const char* kDimension = "E_DIMENSION";  // length/shape mismatch
inline constexpr const char* kConfig = "E_CONFIG";        // bad option or config value
inline constexpr const char* kDiverged = "E_DIVERGED";    // non-finite loss during training
inline constexpr const char* kMismatch = "E_MISMATCH";    // incompatible artifacts (dict/model/...)
inline constexpr const char* kEmpty = "E_EMPTY";          // empty corpus where data is required
}  // namespace errc

}  // namespace symdef

#endif  // SYMDEF_ERROR_HPP
