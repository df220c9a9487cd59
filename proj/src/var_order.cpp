#include "tsbdd/var_order.hpp"

#include "tsbdd/errors.hpp"

namespace tsbdd {

VarOrder::VarOrder(std::vector<std::string> names) {
  for (auto& n : names) add(std::move(n));
}

int VarOrder::add(std::string name) {
  if (name.empty()) throw InvalidArgument("empty variable name");
  if (index_.count(name)) throw InvalidArgument("duplicate variable '" + name + "'");
  names_.push_back(name);
  const int level = static_cast<int>(names_.size());
  index_.emplace(std::move(name), level);
  return level;
}

std::optional<int> VarOrder::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int VarOrder::level_of(std::string_view name) const {
  auto level = find(name);
  if (!level) throw UnknownVariable(std::string(name));
  return *level;
}

const std::string& VarOrder::name_at(int level) const {
  if (level < 1 || level > size())
    throw InvalidArgument("level " + std::to_string(level) + " out of range");
  return names_[static_cast<std::size_t>(level - 1)];
}

}  // namespace tsbdd
