#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "core/node.hpp"

namespace flint {

// Ordered collection of named weight tensors. Order is creation order and is
// preserved through checkpoints.
class ModelParams {
public:
  ag::NodePtr add(const std::string& name, Tensor t);
  const ag::NodePtr& at(const std::string& name) const;
  bool has(const std::string& name) const { return index_.count(name) != 0; }
  const std::vector<std::pair<std::string, ag::NodePtr>>& entries() const { return entries_; }
  std::vector<ag::NodePtr> nodes() const;
  std::size_t scalar_count() const;
  void zero_grads() const;

private:
  std::vector<std::pair<std::string, ag::NodePtr>> entries_;
  std::map<std::string, std::size_t> index_;
};

// Container of named float32 tensors with a text index, plus free-form
// metadata lines. Binary layout: magic "FLC1", little-endian u32 index
// length, the index text, then the float32 payload.
struct Checkpoint {
  std::vector<std::pair<std::string, Tensor>> tensors;
  std::vector<std::pair<std::string, std::string>> meta;

  const Tensor* find(const std::string& name) const;
  std::string meta_value(const std::string& key, const std::string& fallback = "") const;
};

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

Checkpoint params_to_checkpoint(const ModelParams& params);
ModelParams params_from_checkpoint(const Checkpoint& ck);

}  // namespace flint
