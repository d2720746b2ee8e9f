#pragma once

#include <algorithm>
#include <concepts>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "aeplan/error.hpp"

namespace aeplan::nn {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Mutable view of one named parameter array. Storage is column-major.
struct ParamSpan {
  std::string name;
  std::span<double> values;
};

struct ConstParamSpan {
  std::string name;
  std::span<const double> values;
};

/// A parameter set exposes its arrays in a fixed declaration order. The same
/// type doubles as its own gradient bundle, so shapes always line up.
template <class P>
concept ParameterSet = requires(P& p, const P& cp) {
  { p.parameters() } -> std::same_as<std::vector<ParamSpan>>;
  { cp.parameters() } -> std::same_as<std::vector<ConstParamSpan>>;
};

template <class Derived>
std::span<double> values_of(Eigen::PlainObjectBase<Derived>& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

template <class Derived>
std::span<const double> values_of(const Eigen::PlainObjectBase<Derived>& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

inline std::string join_name(const std::string& prefix, const char* name) {
  return prefix.empty() ? std::string(name) : prefix + "." + name;
}

/// Copy of `p` with every entry set to zero.
template <ParameterSet P>
P zeros_like(P p) {
  for (auto& span : p.parameters()) std::ranges::fill(span.values, 0.0);
  return p;
}

template <ParameterSet P>
std::size_t parameter_count(const P& p) {
  std::size_t n = 0;
  for (const auto& span : p.parameters()) n += span.values.size();
  return n;
}

template <ParameterSet P>
void require_same_shape(const P& a, const P& b) {
  const auto sa = a.parameters();
  const auto sb = b.parameters();
  if (sa.size() != sb.size()) throw ShapeError("parameter sets differ in array count");
  for (std::size_t i = 0; i < sa.size(); ++i) {
    if (sa[i].name != sb[i].name || sa[i].values.size() != sb[i].values.size()) {
      throw ShapeError("parameter array '" + sa[i].name + "' does not match '" +
                       sb[i].name + "'");
    }
  }
}

/// Flattens a parameter set into one vector in declaration order.
template <ParameterSet P>
VectorXd flatten(const P& p) {
  VectorXd out(static_cast<Index>(parameter_count(p)));
  Index k = 0;
  for (const auto& span : p.parameters())
    for (double v : span.values) out[k++] = v;
  return out;
}

template <ParameterSet P>
void unflatten(const VectorXd& flat, P& p) {
  if (static_cast<std::size_t>(flat.size()) != parameter_count(p))
    throw ShapeError("flat parameter vector has the wrong length");
  Index k = 0;
  for (auto& span : p.parameters())
    for (double& v : span.values) v = flat[k++];
}

}  // namespace aeplan::nn
