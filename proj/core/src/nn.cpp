// Copyright 2026 The iowbc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "iowbc/nn.hpp"

#include "iowbc/config.hpp"

#include <bit>
#include <cstring>

namespace iowbc {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

double gaussian_logprob(const VecX& mean, const VecX& log_std, const VecX& action) {
  if (mean.size() != log_std.size() || mean.size() != action.size()) {
    throw ConfigError("gaussian_logprob: dimension mismatch");
  }
  double lp = -0.5 * mean.size() * std::log(2 * kPi);
  for (int i = 0; i < mean.size(); ++i) {
    const double s = std::exp(log_std[i]);
    const double z = (action[i] - mean[i]) / s;
    lp -= 0.5 * z * z + log_std[i];
  }
  return lp;
}

double gaussian_entropy(const VecX& log_std) {
  return log_std.sum() + 0.5 * log_std.size() * std::log(2 * kPi * std::exp(1.0));
}

double gaussian_kl(const VecX& mean_p, const VecX& log_std_p, const VecX& mean_q,
                   const VecX& log_std_q) {
  if (mean_p.size() != mean_q.size() || log_std_p.size() != log_std_q.size() ||
      mean_p.size() != log_std_p.size()) {
    throw ConfigError("gaussian_kl: dimension mismatch");
  }
  double kl = 0;
  for (int i = 0; i < mean_p.size(); ++i) {
    const double vp = std::exp(2 * log_std_p[i]);
    const double vq = std::exp(2 * log_std_q[i]);
    const double dm = mean_p[i] - mean_q[i];
    kl += log_std_q[i] - log_std_p[i] + (vp + dm * dm) / (2 * vq) - 0.5;
  }
  return kl;
}

const NamedTensor* Checkpoint::find(const std::string& name) const {
  for (const NamedTensor& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

const NamedTensor& Checkpoint::require(const std::string& name) const {
  const NamedTensor* t = find(name);
  if (!t) throw IoError("checkpoint: missing tensor '" + name + "'");
  return *t;
}

namespace {

constexpr char kMagic[4] = {'I', 'O', 'W', 'B'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::string* out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out->append(buf, sizeof(T));
}

template <typename T>
T take(const std::string& in, size_t* off, const std::string& path) {
  if (*off + sizeof(T) > in.size()) throw IoError("checkpoint truncated: " + path);
  T v;
  std::memcpy(&v, in.data() + *off, sizeof(T));
  *off += sizeof(T);
  return v;
}

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::string out;
  out.append(kMagic, 4);
  put<std::uint32_t>(&out, kVersion);
  put<std::uint64_t>(&out, ck.obs_layout_hash);
  put<std::uint64_t>(&out, ck.training_step);
  put<std::uint64_t>(&out, ck.rng_seed);
  put<std::uint32_t>(&out, static_cast<std::uint32_t>(ck.tensors.size()));
  for (const NamedTensor& t : ck.tensors) {
    put<std::uint32_t>(&out, static_cast<std::uint32_t>(t.name.size()));
    out.append(t.name);
    put<std::uint32_t>(&out, static_cast<std::uint32_t>(t.dims.size()));
    std::uint64_t n = 1;
    for (const std::uint32_t d : t.dims) {
      put<std::uint32_t>(&out, d);
      n *= d;
    }
    if (n != t.data.size()) {
      throw IoError("checkpoint: tensor '" + t.name + "' dims do not match payload");
    }
    out.append(reinterpret_cast<const char*>(t.data.data()), t.data.size() * sizeof(float));
  }
  write_text_file(path, out);
}

Checkpoint load_checkpoint(const std::string& path, std::uint64_t expected_obs_hash) {
  const std::string in = read_text_file(path);
  size_t off = 0;
  if (in.size() < 4 || std::memcmp(in.data(), kMagic, 4) != 0) {
    throw IoError("not a policy checkpoint (bad magic): " + path);
  }
  off = 4;
  const auto version = take<std::uint32_t>(in, &off, path);
  if (version != kVersion) {
    throw IoError("checkpoint version " + std::to_string(version) + " unsupported: " + path);
  }
  Checkpoint ck;
  ck.obs_layout_hash = take<std::uint64_t>(in, &off, path);
  ck.training_step = take<std::uint64_t>(in, &off, path);
  ck.rng_seed = take<std::uint64_t>(in, &off, path);
  if (expected_obs_hash != 0 && ck.obs_layout_hash != expected_obs_hash) {
    throw IoError("checkpoint observation layout mismatch: " + path);
  }
  const auto count = take<std::uint32_t>(in, &off, path);
  ck.tensors.resize(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor& t = ck.tensors[i];
    const auto name_len = take<std::uint32_t>(in, &off, path);
    if (off + name_len > in.size()) throw IoError("checkpoint truncated: " + path);
    t.name.assign(in.data() + off, name_len);
    off += name_len;
    const auto rank = take<std::uint32_t>(in, &off, path);
    t.dims.resize(rank);
    std::uint64_t n = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      t.dims[r] = take<std::uint32_t>(in, &off, path);
      n *= t.dims[r];
    }
    if (off + n * sizeof(float) > in.size()) throw IoError("checkpoint truncated: " + path);
    t.data.resize(n);
    std::memcpy(t.data.data(), in.data() + off, n * sizeof(float));
    off += n * sizeof(float);
  }
  return ck;
}

void append_mlp_tensors(const MlpNetF& net, const std::string& prefix, Checkpoint* ck) {
  for (int l = 0; l < net.n_layers(); ++l) {
    NamedTensor w;
    w.name = prefix + ".w" + std::to_string(l);
    w.dims = {static_cast<std::uint32_t>(net.W[l].rows()),
              static_cast<std::uint32_t>(net.W[l].cols())};
    w.data.assign(net.W[l].data(), net.W[l].data() + net.W[l].size());
    ck->tensors.push_back(std::move(w));
    NamedTensor b;
    b.name = prefix + ".b" + std::to_string(l);
    b.dims = {static_cast<std::uint32_t>(net.b[l].size())};
    b.data.assign(net.b[l].data(), net.b[l].data() + net.b[l].size());
    ck->tensors.push_back(std::move(b));
  }
}

MlpNetF mlp_from_checkpoint(const Checkpoint& ck, const std::string& prefix) {
  MlpNetF net;
  for (int l = 0;; ++l) {
    const NamedTensor* w = ck.find(prefix + ".w" + std::to_string(l));
    if (!w) break;
    const NamedTensor& b = ck.require(prefix + ".b" + std::to_string(l));
    if (w->dims.size() != 2 || b.dims.size() != 1 || b.dims[0] != w->dims[0]) {
      throw IoError("checkpoint: malformed layer shapes under '" + prefix + "'");
    }
    MatXf wm(w->dims[0], w->dims[1]);
    std::memcpy(wm.data(), w->data.data(), w->data.size() * sizeof(float));
    VecXf bv(b.dims[0]);
    std::memcpy(bv.data(), b.data.data(), b.data.size() * sizeof(float));
    net.W.push_back(std::move(wm));
    net.b.push_back(std::move(bv));
  }
  if (net.W.empty()) throw IoError("checkpoint: no layers under prefix '" + prefix + "'");
  net.widths.resize(net.W.size() + 1);
  net.widths[0] = static_cast<int>(net.W[0].cols());
  for (size_t l = 0; l < net.W.size(); ++l) {
    if (net.W[l].cols() != (l == 0 ? net.W[0].cols() : net.W[l - 1].rows())) {
      throw IoError("checkpoint: inconsistent layer chain under '" + prefix + "'");
    }
    net.widths[l + 1] = static_cast<int>(net.W[l].rows());
  }
  return net;
}

}  // namespace iowbc
