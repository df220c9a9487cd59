#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tsbdd {

/// Linear order over named Boolean variables. Level 1 is tested first; levels
/// are contiguous 1..size().
class VarOrder {
 public:
  VarOrder() = default;
  explicit VarOrder(std::vector<std::string> names);

  /// Appends a variable and returns its level. Throws on duplicates.
  int add(std::string name);

  int size() const { return static_cast<int>(names_.size()); }
  bool contains(std::string_view name) const { return find(name).has_value(); }
  std::optional<int> find(std::string_view name) const;
  /// Throws UnknownVariable.
  int level_of(std::string_view name) const;
  const std::string& name_at(int level) const;
  const std::vector<std::string>& names() const { return names_; }

  bool operator==(const VarOrder& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace tsbdd
