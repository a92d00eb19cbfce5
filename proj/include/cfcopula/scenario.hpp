#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstddef>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "error.hpp"
#include "sample.hpp"

namespace cfcopula {

enum class TransformOp { set_constant, max_with, conditional_max };

/// One step of a policy. `value` is the constant for set_constant and the
/// lower bound s for max_with. conditional_max raises `column` to at least
/// `floor` on rows whose `trigger` is at most `threshold`.
struct Transform {
  TransformOp op = TransformOp::set_constant;
  std::string column;
  double value = 0.0;
  std::string trigger;
  double threshold = 0.0;
  double floor = 16.0;
};

struct ScenarioSpec {
  std::vector<Transform> transforms;

  bool empty() const noexcept { return transforms.empty(); }

  static ScenarioSpec max_with(std::string column, double s) {
    Transform t;
    t.op = TransformOp::max_with;
    t.column = std::move(column);
    t.value = s;
    return {{t}};
  }
  static ScenarioSpec conditional_max(std::string column, std::string trigger, double threshold,
                                      double floor = 16.0) {
    Transform t;
    t.op = TransformOp::conditional_max;
    t.column = std::move(column);
    t.trigger = std::move(trigger);
    t.threshold = threshold;
    t.floor = floor;
    return {{t}};
  }
  static ScenarioSpec set_constant(std::string column, double v) {
    Transform t;
    t.op = TransformOp::set_constant;
    t.column = std::move(column);
    t.value = v;
    return {{t}};
  }
};

namespace detail {

inline std::string_view strip(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline double scenario_number(std::string_view s, std::string_view context) {
  s = strip(s);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw UsageError("expected a number in '" + std::string(context) + "', got '" + std::string(s) + "'");
  return v;
}

}  // namespace detail

/// Text form, steps separated by ';':
///   set_constant(col, v)
///   max_with(col, s)
///   conditional_max(col, trigger, s' [, floor])     floor defaults to 16
/// A blank string or the word `identity` is the identity policy.
inline ScenarioSpec parse_scenario(std::string_view text) {
  ScenarioSpec spec;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(';', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view item = detail::strip(text.substr(pos, end - pos));
    pos = end + 1;
    if (item.empty() || item == "identity") continue;

    const auto open = item.find('(');
    if (open == std::string_view::npos || item.back() != ')')
      throw UsageError("malformed scenario step '" + std::string(item) + "'");
    const std::string_view name = detail::strip(item.substr(0, open));
    std::vector<std::string_view> args;
    std::string_view inner = item.substr(open + 1, item.size() - open - 2);
    for (std::size_t p = 0;;) {
      const std::size_t c = inner.find(',', p);
      args.push_back(detail::strip(inner.substr(p, c == std::string_view::npos ? inner.npos : c - p)));
      if (c == std::string_view::npos) break;
      p = c + 1;
    }

    Transform t;
    t.column = std::string(args[0]);
    if (t.column.empty()) throw UsageError("scenario step '" + std::string(item) + "' names no column");
    if (name == "set_constant" || name == "max_with") {
      if (args.size() != 2) throw UsageError(std::string(name) + " takes (column, value)");
      t.op = name == "set_constant" ? TransformOp::set_constant : TransformOp::max_with;
      t.value = detail::scenario_number(args[1], item);
    } else if (name == "conditional_max") {
      if (args.size() != 3 && args.size() != 4)
        throw UsageError("conditional_max takes (column, trigger, threshold[, floor])");
      t.op = TransformOp::conditional_max;
      t.trigger = std::string(args[1]);
      t.threshold = detail::scenario_number(args[2], item);
      if (args.size() == 4) t.floor = detail::scenario_number(args[3], item);
    } else {
      throw UsageError("unknown scenario transform '" + std::string(name) + "'");
    }
    spec.transforms.push_back(std::move(t));
  }
  return spec;
}

inline std::string to_string(const Transform& t) {
  auto num = [](double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
  };
  switch (t.op) {
    case TransformOp::set_constant: return "set_constant(" + t.column + "," + num(t.value) + ")";
    case TransformOp::max_with: return "max_with(" + t.column + "," + num(t.value) + ")";
    case TransformOp::conditional_max:
      return "conditional_max(" + t.column + "," + t.trigger + "," + num(t.threshold) + "," + num(t.floor) + ")";
  }
  return {};
}

inline std::string to_string(const ScenarioSpec& s) {
  std::string out;
  for (const auto& t : s.transforms) out += (out.empty() ? "" : ";") + to_string(t);
  return out;
}

namespace detail {

inline std::size_t covariate_index(const ObservationSample& s, const std::string& name) {
  auto it = std::find(s.x_names.begin(), s.x_names.end(), name);
  if (it == s.x_names.end()) throw UsageError("scenario refers to unknown covariate '" + name + "'");
  return static_cast<std::size_t>(it - s.x_names.begin());
}

}  // namespace detail

/// x* starts as a copy of x; steps run in order, each reading the x* left by
/// the previous one (a trigger column that no step changes is just x).
inline ObservationSample apply_scenario(const ObservationSample& s, const ScenarioSpec& spec) {
  ObservationSample out = s;
  out.xstar = out.x;
  const std::size_t n = s.size(), d = s.dim();
  for (const auto& t : spec.transforms) {
    const std::size_t c = detail::covariate_index(s, t.column);
    const std::size_t g = t.op == TransformOp::conditional_max ? detail::covariate_index(s, t.trigger) : c;
    for (std::size_t i = 0; i < n; ++i) {
      double& v = out.xstar[i * d + c];
      switch (t.op) {
        case TransformOp::set_constant: v = t.value; break;
        case TransformOp::max_with: v = std::max(v, t.value); break;
        case TransformOp::conditional_max:
          if (out.xstar[i * d + g] <= t.threshold) v = std::max(v, t.floor);
          break;
      }
    }
  }
  return out;
}

/// Rows whose x* differs from x in any coordinate.
inline std::size_t affected_rows(const ObservationSample& s) {
  const std::size_t n = s.size(), d = s.dim();
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (!std::equal(s.x.begin() + static_cast<std::ptrdiff_t>(i * d),
                    s.x.begin() + static_cast<std::ptrdiff_t>((i + 1) * d),
                    s.xstar.begin() + static_cast<std::ptrdiff_t>(i * d)))
      ++k;
  return k;
}

inline double affected_fraction(const ObservationSample& s) {
  return static_cast<double>(affected_rows(s)) / static_cast<double>(s.size());
}

}  // namespace cfcopula
