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

#ifndef IOWBC_NN_HPP_
#define IOWBC_NN_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "iowbc/common.hpp"

namespace iowbc {

/// Dense MLP, elu hidden activations, identity output. Templated on the
/// scalar so the gradient test suite can run a 64-bit copy of the exact same
/// code; production nets are float. Batches are column-per-sample.
template <typename T>
struct MlpNetT {
  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

  std::vector<int> widths;   /// input, hidden..., output
  std::vector<Mat> W;        /// W[l] maps widths[l] -> widths[l+1]
  std::vector<Vec> b;

  int input_dim() const { return widths.front(); }
  int output_dim() const { return widths.back(); }
  int n_layers() const { return static_cast<int>(W.size()); }
  std::int64_t n_params() const {
    std::int64_t n = 0;
    for (size_t l = 0; l < W.size(); ++l) n += W[l].size() + b[l].size();
    return n;
  }
  bool finite() const {
    for (size_t l = 0; l < W.size(); ++l) {
      if (!W[l].allFinite() || !b[l].allFinite()) return false;
    }
    return true;
  }
};

template <typename T>
inline T elu(T x) {
  return x > T(0) ? x : std::expm1(x);
}

/// He-normal weights, zero biases. last_layer_scale shrinks the output layer
/// (policy heads start near the reference posture).
template <typename T>
MlpNetT<T> make_mlp(const std::vector<int>& widths, RngStream* rng, T last_layer_scale = T(1)) {
  if (widths.size() < 2) throw ConfigError("mlp needs at least input and output widths");
  for (int w : widths) {
    if (w < 1) throw ConfigError("mlp widths must be >= 1");
  }
  MlpNetT<T> net;
  net.widths = widths;
  const int nl = static_cast<int>(widths.size()) - 1;
  net.W.resize(nl);
  net.b.resize(nl);
  for (int l = 0; l < nl; ++l) {
    const int in = widths[l], out = widths[l + 1];
    const T sd = std::sqrt(T(2) / T(in)) * (l == nl - 1 ? last_layer_scale : T(1));
    net.W[l].resize(out, in);
    for (int j = 0; j < in; ++j) {
      for (int i = 0; i < out; ++i) net.W[l](i, j) = sd * T(rng->normal());
    }
    net.b[l].setZero(out);
  }
  return net;
}

/// Per-layer activations cached for the backward pass. h[0] is the input
/// batch, h[l+1] the output of layer l; z holds pre-activations.
template <typename T>
struct MlpWorkspace {
  std::vector<typename MlpNetT<T>::Mat> h;
  std::vector<typename MlpNetT<T>::Mat> z;
};

template <typename T>
const typename MlpNetT<T>::Mat& forward_cached(const MlpNetT<T>& net,
                                               const typename MlpNetT<T>::Mat& x,
                                               MlpWorkspace<T>* ws) {
  if (x.rows() != net.input_dim()) throw ConfigError("mlp forward: input dim mismatch");
  const int nl = net.n_layers();
  ws->h.resize(nl + 1);
  ws->z.resize(nl);
  ws->h[0] = x;
  for (int l = 0; l < nl; ++l) {
    ws->z[l].noalias() = net.W[l] * ws->h[l];
    ws->z[l].colwise() += net.b[l];
    if (l + 1 < nl) {
      ws->h[l + 1] = ws->z[l].unaryExpr([](T v) { return elu(v); });
    } else {
      ws->h[l + 1] = ws->z[l];
    }
  }
  return ws->h[nl];
}

template <typename T>
typename MlpNetT<T>::Mat mlp_forward(const MlpNetT<T>& net, const typename MlpNetT<T>::Mat& x) {
  MlpWorkspace<T> ws;
  return forward_cached(net, x, &ws);
}

template <typename T>
typename MlpNetT<T>::Vec mlp_forward(const MlpNetT<T>& net, const typename MlpNetT<T>::Vec& x) {
  MlpWorkspace<T> ws;
  return forward_cached(net, typename MlpNetT<T>::Mat(x), &ws).col(0);
}

template <typename T>
struct MlpGrads {
  std::vector<typename MlpNetT<T>::Mat> dW;
  std::vector<typename MlpNetT<T>::Vec> db;

  void init_like(const MlpNetT<T>& net) {
    dW.resize(net.n_layers());
    db.resize(net.n_layers());
    for (int l = 0; l < net.n_layers(); ++l) {
      dW[l].setZero(net.W[l].rows(), net.W[l].cols());
      db[l].setZero(net.b[l].size());
    }
  }
  void scale(T s) {
    for (size_t l = 0; l < dW.size(); ++l) {
      dW[l] *= s;
      db[l] *= s;
    }
  }
  bool finite() const {
    for (size_t l = 0; l < dW.size(); ++l) {
      if (!dW[l].allFinite() || !db[l].allFinite()) return false;
    }
    return true;
  }
};

/// Reverse-mode pass accumulating into grads (callers zero them first when
/// they want plain gradients). dy is d(loss)/d(output), one column per
/// sample; returns nothing but optionally writes d(loss)/d(input).
template <typename T>
void mlp_backward(const MlpNetT<T>& net, const MlpWorkspace<T>& ws,
                  const typename MlpNetT<T>::Mat& dy, MlpGrads<T>* grads,
                  typename MlpNetT<T>::Mat* dx = nullptr) {
  const int nl = net.n_layers();
  if (dy.rows() != net.output_dim() || dy.cols() != ws.h[0].cols()) {
    throw ConfigError("mlp backward: output gradient shape mismatch");
  }
  typename MlpNetT<T>::Mat delta = dy;
  for (int l = nl - 1; l >= 0; --l) {
    if (l < nl - 1) {
      // d elu(z) = 1 for z > 0, elu(z) + 1 otherwise (h already holds elu(z)).
      delta.array() *= ws.z[l].array().binaryExpr(
          ws.h[l + 1].array(), [](T z, T h) { return z > T(0) ? T(1) : h + T(1); });
    }
    grads->dW[l].noalias() += delta * ws.h[l].transpose();
    grads->db[l] += delta.rowwise().sum();
    if (l > 0 || dx != nullptr) {
      typename MlpNetT<T>::Mat prev;
      prev.noalias() = net.W[l].transpose() * delta;
      if (l == 0) {
        if (dx) *dx = prev;
      } else {
        delta.swap(prev);
      }
    }
  }
}

/// Diagonal-Gaussian head quantities; everything reduces in double.
double gaussian_logprob(const VecX& mean, const VecX& log_std, const VecX& action);
double gaussian_entropy(const VecX& log_std);
/// KL(p || q) = sum log(sq/sp) + (sp^2 + (mp-mq)^2) / (2 sq^2) - 1/2.
double gaussian_kl(const VecX& mean_p, const VecX& log_std_p, const VecX& mean_q,
                   const VecX& log_std_q);

inline double clamp_log_std(double v) { return clampd(v, -4.0, 1.0); }

/// Adaptive-moment update over one tensor; moments live alongside the
/// parameters. A non-finite gradient skips the whole step.
struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
struct AdamState {
  std::vector<typename MlpNetT<T>::Mat> m;
  std::vector<typename MlpNetT<T>::Mat> v;
  std::int64_t step = 0;
  int nan_skips = 0;

  /// Registers tensors in a fixed order; net layers first, then extras.
  void init(const std::vector<std::pair<int, int>>& shapes) {
    m.resize(shapes.size());
    v.resize(shapes.size());
    for (size_t i = 0; i < shapes.size(); ++i) {
      m[i].setZero(shapes[i].first, shapes[i].second);
      v[i].setZero(shapes[i].first, shapes[i].second);
    }
  }
};

/// One update across matched parameter/gradient tensor lists. Returns false
/// (and counts) when any gradient is non-finite; parameters keep their values
/// but the step counter still advances.
template <typename T>
bool adam_step(std::vector<Eigen::Map<typename MlpNetT<T>::Mat>>* params,
               const std::vector<const typename MlpNetT<T>::Mat*>& grads, AdamState<T>* st,
               const AdamConfig& cfg) {
  st->step += 1;
  for (const auto* g : grads) {
    if (!g->allFinite()) {
      st->nan_skips += 1;
      return false;
    }
  }
  const T b1 = T(cfg.beta1), b2 = T(cfg.beta2);
  const T bc1 = T(1) - std::pow(b1, T(st->step));
  const T bc2 = T(1) - std::pow(b2, T(st->step));
  const T alpha = T(cfg.lr) * std::sqrt(bc2) / bc1;
  for (size_t i = 0; i < params->size(); ++i) {
    auto& m = st->m[i];
    auto& v = st->v[i];
    const auto& g = *grads[i];
    m = b1 * m + (T(1) - b1) * g;
    v = b2 * v + (T(1) - b2) * g.cwiseProduct(g);
    (*params)[i].array() -= alpha * m.array() / (v.array().sqrt() + T(cfg.eps));
  }
  return true;
}

/// Checkpoint container: named float32 tensors plus run metadata. The file
/// layout is fixed little-endian (magic "IOWB").
struct NamedTensor {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> data;
};

struct Checkpoint {
  std::uint64_t obs_layout_hash = 0;
  std::uint64_t training_step = 0;
  std::uint64_t rng_seed = 0;
  std::vector<NamedTensor> tensors;

  const NamedTensor* find(const std::string& name) const;
  const NamedTensor& require(const std::string& name) const;
};

void save_checkpoint(const Checkpoint& ck, const std::string& path);

/// expected_obs_hash 0 skips the layout guard (tools that only inspect).
Checkpoint load_checkpoint(const std::string& path, std::uint64_t expected_obs_hash);

using MlpNetF = MlpNetT<float>;
using MatXf = Eigen::MatrixXf;
using VecXf = Eigen::VectorXf;

/// Net <-> named tensor conversion ("prefix.w0", "prefix.b0", ...).
void append_mlp_tensors(const MlpNetF& net, const std::string& prefix, Checkpoint* ck);
MlpNetF mlp_from_checkpoint(const Checkpoint& ck, const std::string& prefix);

}  // namespace iowbc

#endif  // IOWBC_NN_HPP_
