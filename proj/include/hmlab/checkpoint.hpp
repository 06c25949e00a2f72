// Copyright 2026 The hypermarl-lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Policy snapshots.
//
// Format: a text header, one field per line,
//
//   hmlab-policy 1
//   variant <kind> hidden <h> embed <e> hyper_hidden <hh> reset_fan <0|1> head_scale <x>
//   dims <n_agents> <n_actions> <obs_dim>
//   segment <name> <rows> <cols> <offset>     (one line per layout segment)
//   params <count>
//   data
//
// followed by <count> little-endian IEEE-754 float64 values in layout order.

#include <iosfwd>
#include <string>

#include "hmlab/policy.hpp"

namespace hmlab {

void write_checkpoint(const Policy& policy, std::ostream& out);
Policy read_checkpoint(std::istream& in);

// Atomic (temp file + rename). Throws IoError.
void save_checkpoint(const Policy& policy, const std::string& path);
Policy load_checkpoint(const std::string& path);

}  // namespace hmlab
