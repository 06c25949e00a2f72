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

#include "hmlab/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "hmlab/errors.hpp"
#include "hmlab/io.hpp"

namespace hmlab {

namespace {

constexpr const char* kMagic = "hmlab-policy 1";

std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) return __builtin_bswap64(v);
  return v;
}

std::string expect_line(std::istream& in, const std::string& what) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("checkpoint truncated before " + what);
  return line;
}

}  // namespace

void write_checkpoint(const Policy& policy, std::ostream& out) {
  const VariantSpec& v = policy.variant();
  std::ostringstream head;
  head.precision(17);
  head << kMagic << "\n";
  head << "variant " << to_string(v.kind) << " hidden " << v.hidden_dim << " embed "
       << v.embed_dim << " hyper_hidden " << v.hyper_hidden_dim << " reset_fan "
       << (v.reset_fan_init ? 1 : 0) << " head_scale " << v.head_scale << "\n";
  head << "dims " << policy.dims().n_agents << " " << policy.dims().n_actions << " "
       << policy.dims().obs_dim << "\n";
  for (const ParamSegment& s : policy.layout()) {
    head << "segment " << s.name << " " << s.rows << " " << s.cols << " " << s.offset << "\n";
  }
  head << "params " << policy.num_params() << "\n";
  head << "data\n";
  out << head.str();
  for (double x : policy.params()) {
    const std::uint64_t bits = to_le(std::bit_cast<std::uint64_t>(x));
    char buf[8];
    std::memcpy(buf, &bits, 8);
    out.write(buf, 8);
  }
  if (!out) throw IoError("failed writing checkpoint");
}

Policy read_checkpoint(std::istream& in) {
  if (expect_line(in, "magic") != kMagic) throw IoError("not a policy checkpoint");

  VariantSpec v;
  {
    std::istringstream ss(expect_line(in, "variant"));
    std::string tag, kind, k1, k2, k3, k4, k5;
    int reset = 1;
    ss >> tag >> kind >> k1 >> v.hidden_dim >> k2 >> v.embed_dim >> k3 >> v.hyper_hidden_dim >>
        k4 >> reset >> k5 >> v.head_scale;
    if (!ss || tag != "variant") throw IoError("bad variant line in checkpoint");
    v.kind = parse_variant_kind(kind);
    v.reset_fan_init = reset != 0;
  }
  PolicyDims d;
  {
    std::istringstream ss(expect_line(in, "dims"));
    std::string tag;
    ss >> tag >> d.n_agents >> d.n_actions >> d.obs_dim;
    if (!ss || tag != "dims") throw IoError("bad dims line in checkpoint");
  }
  ParamLayout segments;
  std::size_t count = 0;
  for (;;) {
    std::istringstream ss(expect_line(in, "params"));
    std::string tag;
    ss >> tag;
    if (tag == "segment") {
      ParamSegment s;
      ss >> s.name >> s.rows >> s.cols >> s.offset;
      if (!ss) throw IoError("bad segment line in checkpoint");
      segments.push_back(s);
      continue;
    }
    if (tag != "params") throw IoError("unexpected line in checkpoint header: " + tag);
    ss >> count;
    if (!ss) throw IoError("bad params line in checkpoint");
    break;
  }
  if (expect_line(in, "data") != "data") throw IoError("missing data marker in checkpoint");

  Rng rng(0);
  Policy policy = Policy::build(v, d, rng);
  if (policy.num_params() != count) {
    throw IoError("checkpoint holds " + std::to_string(count) + " parameters, variant needs " +
                  std::to_string(policy.num_params()));
  }
  const ParamLayout expected = policy.layout();
  if (expected.size() != segments.size()) throw IoError("checkpoint layout does not match variant");
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const auto& a = expected[i];
    const auto& b = segments[i];
    if (a.name != b.name || a.rows != b.rows || a.cols != b.cols || a.offset != b.offset) {
      throw IoError("checkpoint segment '" + b.name + "' does not match variant layout");
    }
  }
  std::vector<double> values(count);
  for (double& x : values) {
    char buf[8];
    if (!in.read(buf, 8)) throw IoError("checkpoint data truncated");
    std::uint64_t bits;
    std::memcpy(&bits, buf, 8);
    x = std::bit_cast<double>(to_le(bits));
  }
  policy.set_params(values);
  return policy;
}

void save_checkpoint(const Policy& policy, const std::string& path) {
  std::ostringstream out(std::ios::binary);
  write_checkpoint(policy, out);
  write_file_atomic(path, out.str());
}

Policy load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path);
  return read_checkpoint(in);
}

}  // namespace hmlab
