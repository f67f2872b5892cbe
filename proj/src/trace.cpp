#include "gapfilter/trace.hpp"

#include <stdexcept>

namespace gapfilter {

std::uint32_t Trace::intern(std::string_view fid) {
  if (fid.empty()) throw std::invalid_argument("flow id must be non-empty");
  std::string key(fid);
  auto it = index_.find(key);
  if (it != index_.end()) return it->second;
  const auto id = static_cast<std::uint32_t>(flows_.size());
  flows_.push_back(key);
  index_.emplace(std::move(key), id);
  return id;
}

std::int64_t Trace::find_flow(std::string_view fid) const {
  auto it = index_.find(std::string(fid));
  return it == index_.end() ? -1 : static_cast<std::int64_t>(it->second);
}

bool Trace::same_items(const Trace& other) const {
  if (size() != other.size()) return false;
  for (std::size_t i = 0; i < size(); ++i) {
    const Item a = (*this)[i];
    const Item b = other[i];
    if (a.seq != b.seq || a.fid != b.fid) return false;
  }
  return true;
}

}  // namespace gapfilter
