/*
 * Copyright 2026 The pcfsl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "pcfsl/nn/param.hpp"

namespace pcfsl {

std::vector<Param*> ParamRegistry::trainable() const {
  std::vector<Param*> out;
  for (const auto& [name, p] : entries_)
    if (p->trainable) out.push_back(p);
  return out;
}

Param* ParamRegistry::find(const std::string& name) const {
  for (const auto& [n, p] : entries_)
    if (n == name) return p;
  return nullptr;
}

void ParamRegistry::zero_grad() const {
  for (const auto& [name, p] : entries_)
    if (p->trainable) p->zero_grad();
}

std::size_t ParamRegistry::trainable_count() const {
  std::size_t n = 0;
  for (const auto& [name, p] : entries_)
    if (p->trainable) n += static_cast<std::size_t>(p->value.size());
  return n;
}

}  // namespace pcfsl
