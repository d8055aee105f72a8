// Copyright 2026 The GAIC Authors.
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

#include "gaic/optim.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gaic::nd {

Adam::Adam(std::vector<Tensor> params, AdamOptions options)
    : params_(std::move(params)) {
  state_.options = options;
  for (const Tensor& p : params_) {
    state_.first_moment.emplace_back(static_cast<size_t>(p.numel()), 0.0);
    state_.second_moment.emplace_back(static_cast<size_t>(p.numel()), 0.0);
  }
}

void Adam::Step() { AdamStep(params_, state_); }

void Adam::ZeroGrad() {
  for (Tensor& p : params_) p.ZeroGrad();
}

void AdamStep(std::vector<Tensor>& params, AdamState& state) {
  if (state.first_moment.size() != params.size()) {
    throw std::domain_error("adam: state does not match the parameter list");
  }
  const AdamOptions& o = state.options;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(o.beta1, t);
  const double c2 = 1.0 - std::pow(o.beta2, t);
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params[i];
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    if (m.size() != static_cast<size_t>(p.numel())) {
      throw std::domain_error("adam: moment shape mismatch");
    }
    const std::span<const double> g = p.grad();
    std::span<double> w = p.mutable_data();
    for (size_t k = 0; k < m.size(); ++k) {
      const double gk = g.empty() ? 0.0 : g[k];
      m[k] = o.beta1 * m[k] + (1.0 - o.beta1) * gk;
      v[k] = o.beta2 * v[k] + (1.0 - o.beta2) * gk * gk;
      const double mhat = m[k] / c1;
      const double vhat = v[k] / c2;
      w[k] -= o.learning_rate * mhat / (std::sqrt(vhat) + o.epsilon);
    }
  }
}

namespace {

static_assert(std::endian::native == std::endian::little,
              "tensor container assumes a little-endian host");

template <typename T>
void Put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T Get() {
    if (pos_ + sizeof(T) > bytes_.size()) {
      throw std::runtime_error("tensor container truncated");
    }
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string GetString(size_t n) {
    if (pos_ + n > bytes_.size()) throw std::runtime_error("tensor container truncated");
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }
  size_t remaining() const { return bytes_.size() - pos_; }

 private:
  const std::string& bytes_;
  size_t pos_ = 0;
};

}  // namespace

std::string SerializeTensors(const NamedTensors& tensors) {
  std::string out = "GAIC";
  Put<uint32_t>(out, kTensorFormatVersion);
  Put<uint32_t>(out, static_cast<uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    Put<uint32_t>(out, static_cast<uint32_t>(name.size()));
    out += name;
    Put<uint32_t>(out, static_cast<uint32_t>(t.rank()));
    for (int64_t d : t.shape()) Put<uint32_t>(out, static_cast<uint32_t>(d));
    for (double v : t.data()) Put<double>(out, v);
  }
  return out;
}

NamedTensors DeserializeTensors(const std::string& bytes) {
  Reader r(bytes);
  if (r.GetString(4) != "GAIC") throw std::runtime_error("not a GAIC tensor container");
  const uint32_t version = r.Get<uint32_t>();
  if (version != kTensorFormatVersion) {
    throw std::runtime_error("unsupported tensor container version " +
                             std::to_string(version));
  }
  const uint32_t count = r.Get<uint32_t>();
  NamedTensors out;
  for (uint32_t i = 0; i < count; ++i) {
    std::string name = r.GetString(r.Get<uint32_t>());
    const uint32_t rank = r.Get<uint32_t>();
    Shape shape;
    for (uint32_t d = 0; d < rank; ++d) shape.push_back(r.Get<uint32_t>());
    const auto n = static_cast<size_t>(NumElements(shape));
    if (n > r.remaining() / sizeof(double)) {
      throw std::runtime_error("tensor container truncated");
    }
    std::vector<double> data(n);
    for (double& v : data) v = r.Get<double>();
    out.emplace_back(std::move(name), Tensor::FromData(std::move(shape), std::move(data)));
  }
  if (!r.done()) throw std::runtime_error("trailing bytes in tensor container");
  return out;
}

void SaveTensors(const NamedTensors& tensors, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path);
  const std::string bytes = SerializeTensors(tensors);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("write failed: " + path);
}

NamedTensors LoadTensors(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return DeserializeTensors(ss.str());
}

}  // namespace gaic::nd
