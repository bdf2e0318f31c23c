#ifndef SKEPTIC_SPEC_GRAMMAR_HPP
#define SKEPTIC_SPEC_GRAMMAR_HPP

// Text specifications of strategies and sources, as used on the command line:
//
//   beta(a,b)  block(k,shift|all,c)  markov(k,a,b)  universal(kmax)
//   bernoulli(p)  markov_chain(p_0,...,p_{2^k-1})  periodic(01)  bits(0110)  bitfile(path)
//
// Trailing arguments may be omitted and take the defaults a = b = c = 1,
// shift = all, kmax = 8. markov_chain lists P(1 | context) for contexts
// 0 .. 2^k - 1, most recent outcome in the least significant bit.

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "analysis.hpp"
#include "game.hpp"
#include "mixture.hpp"
#include "sources.hpp"
#include "strategies.hpp"

namespace skeptic {

/// A malformed specification; position() is the 0-based column of the problem.
class SpecError : public std::invalid_argument {
 public:
  SpecError(const std::string& spec, std::size_t position, const std::string& what)
      : std::invalid_argument("in \"" + spec + "\" at column " + std::to_string(position + 1) + ": " + what),
        position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

struct SpecArg {
  std::string text;
  std::size_t position = 0;
};

struct SpecCall {
  std::string name;
  std::vector<SpecArg> args;
};

/// Splits "name(arg,arg,...)" into its parts. Whitespace around tokens is ignored.
inline SpecCall parse_call(std::string_view spec) {
  const std::string s(spec);
  auto skip = [&](std::size_t i) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    return i;
  };
  SpecCall call;
  std::size_t i = skip(0);
  const std::size_t name_start = i;
  while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
  if (i == name_start) throw SpecError(s, i, "expected a name");
  call.name = s.substr(name_start, i - name_start);
  i = skip(i);
  if (i >= s.size()) return call;  // bare name, no arguments
  if (s[i] != '(') throw SpecError(s, i, "expected '('");
  ++i;
  std::size_t close = s.find(')', i);
  if (close == std::string::npos) throw SpecError(s, s.size(), "missing ')'");
  if (skip(close + 1) != s.size()) throw SpecError(s, skip(close + 1), "unexpected text after ')'");
  if (skip(i) == close) return call;
  while (true) {
    const std::size_t start = skip(i);
    std::size_t end = start;
    while (end < close && s[end] != ',') ++end;
    std::size_t last = end;
    while (last > start && std::isspace(static_cast<unsigned char>(s[last - 1]))) --last;
    if (last == start) throw SpecError(s, start, "empty argument");
    call.args.push_back(SpecArg{s.substr(start, last - start), start});
    if (end == close) break;
    i = end + 1;
  }
  return call;
}

namespace detail {

inline double spec_number(const std::string& spec, const SpecArg& arg) {
  double v = 0.0;
  const char* first = arg.text.data();
  const char* last = first + arg.text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v))
    throw SpecError(spec, arg.position, "expected a number, got \"" + arg.text + "\"");
  return v;
}

inline std::size_t spec_count(const std::string& spec, const SpecArg& arg) {
  std::size_t v = 0;
  const char* first = arg.text.data();
  const char* last = first + arg.text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw SpecError(spec, arg.position, "expected a non-negative integer, got \"" + arg.text + "\"");
  return v;
}

inline double spec_positive(const std::string& spec, const SpecArg& arg) {
  const double v = spec_number(spec, arg);
  if (!(v > 0.0)) throw SpecError(spec, arg.position, "hyperparameter must be positive");
  return v;
}

inline void spec_arity(const std::string& spec, const SpecCall& call, std::size_t max_args) {
  if (call.args.size() > max_args)
    throw SpecError(spec, call.args[max_args].position,
                    call.name + " takes at most " + std::to_string(max_args) + " arguments");
}

inline std::string spec_bits(const std::string& spec, const SpecArg& arg) {
  for (std::size_t j = 0; j < arg.text.size(); ++j)
    if (arg.text[j] != '0' && arg.text[j] != '1') throw SpecError(spec, arg.position + j, "only 0 and 1 are allowed here");
  return arg.text;
}

inline std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Strategies.

struct BetaSpec {
  BetaBinomialParams params;
};
struct BlockSpec {
  std::size_t k = 2;
  std::optional<std::size_t> shift;  // nullopt: all shifts, capital split equally
  double c = 1.0;
};
struct MarkovSpec {
  MarkovParams params;
};
struct UniversalSpec {
  UniversalParams params;
};

using StrategyKind = std::variant<BetaSpec, BlockSpec, MarkovSpec, UniversalSpec>;

class StrategySpec {
 public:
  static StrategySpec parse(std::string_view text) {
    const std::string s(text);
    const SpecCall call = parse_call(s);
    auto arg = [&](std::size_t i) -> const SpecArg* { return i < call.args.size() ? &call.args[i] : nullptr; };
    StrategySpec out;
    if (call.name == "beta") {
      detail::spec_arity(s, call, 2);
      BetaSpec b;
      if (arg(0)) b.params.a = detail::spec_positive(s, *arg(0));
      if (arg(1)) b.params.b = detail::spec_positive(s, *arg(1));
      out.kind_ = b;
    } else if (call.name == "block") {
      detail::spec_arity(s, call, 3);
      BlockSpec b;
      if (arg(0)) b.k = detail::spec_count(s, *arg(0));
      if (b.k < 1 || b.k > kMaxBlockLength)
        throw SpecError(s, arg(0) ? arg(0)->position : 0, "block length must be in [1, 16]");
      if (arg(1) && arg(1)->text != "all") {
        b.shift = detail::spec_count(s, *arg(1));
        if (*b.shift >= b.k) throw SpecError(s, arg(1)->position, "shift must be < k");
      }
      if (arg(2)) b.c = detail::spec_positive(s, *arg(2));
      out.kind_ = b;
    } else if (call.name == "markov") {
      detail::spec_arity(s, call, 3);
      MarkovSpec m;
      if (arg(0)) m.params.k = detail::spec_count(s, *arg(0));
      if (m.params.k > kMaxMarkovOrder) throw SpecError(s, arg(0)->position, "Markov order must be <= 20");
      if (arg(1)) m.params.a = detail::spec_positive(s, *arg(1));
      if (arg(2)) m.params.b = detail::spec_positive(s, *arg(2));
      out.kind_ = m;
    } else if (call.name == "universal") {
      detail::spec_arity(s, call, 1);
      UniversalSpec u;
      if (arg(0)) u.params.k_max = detail::spec_count(s, *arg(0));
      if (u.params.k_max < 1 || u.params.k_max > kMaxBlockLength)
        throw SpecError(s, arg(0)->position, "kmax must be in [1, 16]");
      out.kind_ = u;
    } else {
      throw SpecError(s, 0, "unknown strategy \"" + call.name + "\" (expected beta, block, markov or universal)");
    }
    return out;
  }

  const StrategyKind& kind() const { return kind_; }

  /// Canonical text form; parse(label()) gives back the same strategy.
  std::string label() const {
    using detail::format_number;
    return std::visit(
        [](const auto& k) -> std::string {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, BetaSpec>) {
            return "beta(" + format_number(k.params.a) + "," + format_number(k.params.b) + ")";
          } else if constexpr (std::is_same_v<T, BlockSpec>) {
            return "block(" + std::to_string(k.k) + "," + (k.shift ? std::to_string(*k.shift) : std::string("all")) + "," +
                   format_number(k.c) + ")";
          } else if constexpr (std::is_same_v<T, MarkovSpec>) {
            return "markov(" + std::to_string(k.params.k) + "," + format_number(k.params.a) + "," +
                   format_number(k.params.b) + ")";
          } else {
            return "universal(" + std::to_string(k.params.k_max) + ")";
          }
        },
        kind_);
  }

  AnyPredictor make_predictor(Rho rho) const {
    return std::visit(
        [rho](const auto& k) -> AnyPredictor {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, BetaSpec>) {
            return BetaBinomialPredictor(k.params);
          } else if constexpr (std::is_same_v<T, BlockSpec>) {
            if (k.shift) return BlockPredictor(BlockParams::uniform(k.k, *k.shift, k.c), rho);
            return MixturePredictor(block_all_shifts(k.k, k.c, 1.0, rho), rho);
          } else if constexpr (std::is_same_v<T, MarkovSpec>) {
            return MarkovPredictor(k.params, rho);
          } else {
            return MixturePredictor(universal_components(k.params, rho), rho);
          }
        },
        kind_);
  }

  /// Closed-form log capital on a path.
  double log_capital(const PathPrefix& path, Rho rho) const {
    return std::visit(
        [&](const auto& k) -> double {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, BetaSpec>) {
            return beta_binomial_log_capital(k.params, path, rho);
          } else if constexpr (std::is_same_v<T, BlockSpec>) {
            if (k.shift) return block_log_capital(BlockParams::uniform(k.k, *k.shift, k.c), path, rho);
            return block_all_shifts_log_capital(k.k, path, rho, k.c);
          } else if constexpr (std::is_same_v<T, MarkovSpec>) {
            return markov_log_capital(k.params, path, rho);
          } else {
            return mixture_log_capital(universal_components(k.params, rho), path, rho);
          }
        },
        kind_);
  }

  /// Leading n D(.||.) term of log K on the path; NaN for the universal mixture.
  /// The shift-combined block strategy uses the best shift.
  double main_term(const PathPrefix& path, Rho rho) const {
    return std::visit(
        [&](const auto& k) -> double {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, BetaSpec>) {
            return beta_main_term(path, rho);
          } else if constexpr (std::is_same_v<T, BlockSpec>) {
            if (k.shift) return block_main_term(path, k.k, *k.shift, rho);
            double best = 0.0;
            for (std::size_t a = 0; a < k.k; ++a) best = std::max(best, block_main_term(path, k.k, a, rho));
            return best;
          } else if constexpr (std::is_same_v<T, MarkovSpec>) {
            return markov_main_term(path, k.params.k, rho);
          } else {
            return std::nan("");
          }
        },
        kind_);
  }

  /// Analytic per-round rate (nats) against a source; NaN when not known.
  double target_rate(const BitSource& source, Rho rho) const {
    if (std::holds_alternative<FixedBits>(source)) return std::nan("");
    return std::visit(
        [&](const auto& k) -> double {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, BetaSpec>) {
            return beta_rate_target(source, rho);
          } else if constexpr (std::is_same_v<T, BlockSpec>) {
            if (k.shift) return block_rate_target(source, k.k, *k.shift, rho);
            double best = 0.0;
            for (std::size_t a = 0; a < k.k; ++a) best = std::max(best, block_rate_target(source, k.k, a, rho));
            return best;
          } else if constexpr (std::is_same_v<T, MarkovSpec>) {
            return markov_rate_target(source, k.params.k, rho);
          } else {
            return universal_rate_target(source, rho);
          }
        },
        kind_);
  }

 private:
  StrategyKind kind_;
};

// ---------------------------------------------------------------------------
// Sources.

inline PathPrefix read_bit_file(const std::string& filename) {
  std::ifstream in(filename);
  if (!in) throw std::runtime_error("cannot open bit file " + filename);
  PathPrefix out;
  for (std::istreambuf_iterator<char> it(in), end; it != end; ++it) {
    const char c = *it;
    if (c == '0' || c == '1') {
      out.push_back(static_cast<Bit>(c - '0'));
    } else if (c == '#') {
      while (it != end && *it != '\n') ++it;
      if (it == end) break;
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      throw std::invalid_argument("bit file " + filename + ": unexpected character '" + std::string(1, c) + "'");
    }
  }
  return out;
}

inline BitSource parse_source(std::string_view text) {
  const std::string s(text);
  const SpecCall call = parse_call(s);
  auto need = [&](std::size_t n) {
    if (call.args.size() != n)
      throw SpecError(s, call.args.empty() ? s.size() : call.args.front().position,
                      call.name + " takes exactly " + std::to_string(n) + " argument" + (n == 1 ? "" : "s"));
  };
  auto probability = [&](const SpecArg& a) {
    const double p = detail::spec_number(s, a);
    if (!(p >= 0.0 && p <= 1.0)) throw SpecError(s, a.position, "probability must lie in [0,1]");
    return p;
  };
  if (call.name == "bernoulli") {
    need(1);
    return Bernoulli{probability(call.args[0])};
  }
  if (call.name == "markov_chain") {
    const std::size_t rows = call.args.size();
    if (rows == 0 || (rows & (rows - 1)) != 0)
      throw SpecError(s, call.args.empty() ? s.size() : call.args.front().position,
                      "markov_chain needs 2^k transition probabilities, got " + std::to_string(rows));
    MarkovChain chain;
    chain.k = static_cast<std::size_t>(__builtin_ctzll(rows));
    for (const auto& a : call.args) chain.one_prob.push_back(probability(a));
    try {
      stationary_contexts(chain);
    } catch (const InvalidSource& e) {
      throw SpecError(s, call.args.front().position, e.what());
    }
    return chain;
  }
  if (call.name == "periodic") {
    need(1);
    return Periodic{detail::spec_bits(s, call.args[0])};
  }
  if (call.name == "bits") {
    need(1);
    return FixedBits{PathPrefix::from_string(detail::spec_bits(s, call.args[0]))};
  }
  if (call.name == "bitfile") {
    need(1);
    return FixedBits{read_bit_file(call.args[0].text)};
  }
  throw SpecError(s, 0, "unknown source \"" + call.name + "\" (expected bernoulli, markov_chain, periodic, bits or bitfile)");
}

}  // namespace skeptic

#endif  // SKEPTIC_SPEC_GRAMMAR_HPP
