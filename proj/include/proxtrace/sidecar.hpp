#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace proxtrace {

/// Ordered `key = value` text document used for schemas and model files.
/// Lines starting with '#' are comments; keys are unique.
class KvDocument {
 public:
  void set(std::string key, std::string value);
  void set_doubles(std::string key, const std::vector<double>& values);

  std::optional<std::string_view> find(std::string_view key) const;
  /// Throws DataError naming the key when absent.
  std::string_view get(std::string_view key) const;
  double get_double(std::string_view key) const;
  long long get_int(std::string_view key) const;
  std::vector<double> get_doubles(std::string_view key) const;
  std::vector<std::string> get_words(std::string_view key) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }

  std::string serialize() const;
  static KvDocument parse(std::string_view text);

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

}  // namespace proxtrace
