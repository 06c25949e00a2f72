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

// Small file helpers shared by the artifact writers.

#include <string>
#include <vector>

namespace hmlab {

// Writes to `path + ".tmp"` then renames over `path`. Throws IoError.
void write_file_atomic(const std::string& path, const std::string& contents);

std::string read_file(const std::string& path);

// Six significant digits; empty for NaN.
std::string format_csv_number(double x);

// Joins fields with ',' and terminates with '\n'.
std::string csv_line(const std::vector<std::string>& fields);

}  // namespace hmlab
