#pragma once

// CSV reading and writing for choice datasets.
//
// pairs file        pair_id,vA1,pA1,vA2,vB1,pB1,vB2
//                   (or pair_id,vA1,pA1,vA2,pA2,vB1,pB1,vB2,pB2 with explicit
//                    second probabilities, which must sum to 1 with the first)
// observations file subject_id,pair_id,session,choice
//                   session in {1,2}, choice in {A,B}
//
// A header row is required. Blank lines and lines starting with '#' are
// skipped. Fields are not quoted. Probabilities carry at most 6 fractional
// digits.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "qdtcal/choice_data.hpp"
#include "qdtcal/error.hpp"

namespace qdtcal::csv {

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline double parse_number(std::string_view field, std::size_t line, const char* what) {
  double v = 0.0;
  const auto* end = field.data() + field.size();
  if (field.starts_with('+')) field.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (field.empty() || ec != std::errc{} || ptr != end) {
    throw InputError(std::string("cannot parse ") + what + " '" + std::string(field) + "'", line);
  }
  return v;
}

inline double parse_probability(std::string_view field, std::size_t line, const char* what) {
  const double p = parse_number(field, line, what);
  if (const auto dot = field.find('.'); dot != std::string_view::npos) {
    const auto exponent = field.find_first_of("eE");
    if (exponent != std::string_view::npos) {
      throw InputError(std::string(what) + " must be a plain decimal", line);
    }
    if (field.size() - dot - 1 > 6) {
      throw InputError(std::string(what) + " has more than 6 fractional digits", line);
    }
  }
  return p;
}

// Iterates over data rows, skipping comments and blanks; checks the header.
template <typename RowFn>
void for_each_row(std::istream& in, const std::vector<std::vector<std::string_view>>& headers,
                  RowFn&& on_row) {
  std::string line;
  std::size_t number = 0;
  bool header_seen = false;
  std::size_t header_variant = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    auto fields = split(view);
    if (!header_seen) {
      header_seen = true;
      bool matched = false;
      for (std::size_t h = 0; h < headers.size(); ++h) {
        if (fields == headers[h]) {
          header_variant = h;
          matched = true;
          break;
        }
      }
      if (!matched) throw InputError("unexpected CSV header '" + std::string(view) + "'", number);
      continue;
    }
    if (fields.size() != headers[header_variant].size()) {
      throw InputError("expected " + std::to_string(headers[header_variant].size()) +
                           " fields, found " + std::to_string(fields.size()),
                       number);
    }
    on_row(fields, header_variant, number);
  }
  if (!header_seen) throw InputError("missing CSV header");
}

inline std::ifstream open(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  return in;
}

}  // namespace detail

inline std::vector<LotteryPair> read_pairs(std::istream& in, double outcome_bound = 100.0) {
  static const std::vector<std::vector<std::string_view>> headers = {
      {"pair_id", "vA1", "pA1", "vA2", "vB1", "pB1", "vB2"},
      {"pair_id", "vA1", "pA1", "vA2", "pA2", "vB1", "pB1", "vB2", "pB2"}};
  std::vector<LotteryPair> pairs;
  detail::for_each_row(in, headers, [&](const auto& f, std::size_t variant, std::size_t line) {
    using detail::parse_number;
    using detail::parse_probability;
    const bool explicit_p2 = variant == 1;
    const std::size_t b = explicit_p2 ? 5 : 4;
    const double va1 = parse_number(f[1], line, "vA1");
    const double pa1 = parse_probability(f[2], line, "pA1");
    const double va2 = parse_number(f[3], line, "vA2");
    const double pa2 = explicit_p2 ? parse_probability(f[4], line, "pA2") : 1.0 - pa1;
    const double vb1 = parse_number(f[b], line, "vB1");
    const double pb1 = parse_probability(f[b + 1], line, "pB1");
    const double vb2 = parse_number(f[b + 2], line, "vB2");
    const double pb2 = explicit_p2 ? parse_probability(f[b + 3], line, "pB2") : 1.0 - pb1;
    if (f[0].empty()) throw InputError("empty pair_id", line);
    try {
      pairs.push_back(LotteryPair::make(std::string(f[0]),
                                        Lottery::make(va1, pa1, va2, pa2, outcome_bound),
                                        Lottery::make(vb1, pb1, vb2, pb2, outcome_bound)));
    } catch (const DomainError& e) {
      throw InputError(e.what(), line);
    }
  });
  return pairs;
}

inline std::vector<ChoiceObservation> read_observations(std::istream& in) {
  static const std::vector<std::vector<std::string_view>> headers = {
      {"subject_id", "pair_id", "session", "choice"}};
  std::vector<ChoiceObservation> out;
  detail::for_each_row(in, headers, [&](const auto& f, std::size_t, std::size_t line) {
    ChoiceObservation obs;
    if (f[0].empty() || f[1].empty()) throw InputError("empty identifier", line);
    obs.subject_id = std::string(f[0]);
    obs.pair_id = std::string(f[1]);
    if (f[2] == "1") obs.session = Session::Time1;
    else if (f[2] == "2") obs.session = Session::Time2;
    else throw InputError("session must be 1 or 2, found '" + std::string(f[2]) + "'", line);
    if (f[3] == "A") obs.choice = Option::A;
    else if (f[3] == "B") obs.choice = Option::B;
    else throw InputError("choice must be A or B, found '" + std::string(f[3]) + "'", line);
    out.push_back(std::move(obs));
  });
  return out;
}

/// Loads and validates a dataset. Errors carry the offending line number.
inline ChoiceDataset load_dataset(const std::filesystem::path& pairs_path,
                                  const std::filesystem::path& observations_path,
                                  double outcome_bound = 100.0) {
  auto pairs_in = detail::open(pairs_path);
  auto obs_in = detail::open(observations_path);
  std::vector<LotteryPair> pairs;
  std::vector<ChoiceObservation> obs;
  try {
    pairs = read_pairs(pairs_in, outcome_bound);
  } catch (const InputError& e) {
    throw InputError(pairs_path.string() + ": " + e.what());
  }
  try {
    obs = read_observations(obs_in);
  } catch (const InputError& e) {
    throw InputError(observations_path.string() + ": " + e.what());
  }
  return ChoiceDataset(std::move(pairs), obs);
}

inline ChoiceDataset read_dataset(std::istream& pairs_in, std::istream& observations_in,
                                  double outcome_bound = 100.0) {
  auto pairs = read_pairs(pairs_in, outcome_bound);
  return ChoiceDataset(std::move(pairs), read_observations(observations_in));
}

// Shortest representation that round-trips exactly.
inline std::string format_number(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

// Fixed 6-digit decimal with trailing zeros removed.
inline std::string format_probability(double p) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6) << p;
  auto s = os.str();
  while (s.back() == '0') s.pop_back();
  if (s.back() == '.') s.pop_back();
  return s;
}

inline void write_pairs(std::ostream& out, const std::vector<LotteryPair>& pairs) {
  out << "pair_id,vA1,pA1,vA2,vB1,pB1,vB2\n";
  for (const auto& p : pairs) {
    out << p.id << ',' << format_number(p.a.outcome1) << ',' << format_probability(p.a.prob1) << ','
        << format_number(p.a.outcome2) << ',' << format_number(p.b.outcome1) << ','
        << format_probability(p.b.prob1) << ',' << format_number(p.b.outcome2) << '\n';
  }
}

inline void write_observations(std::ostream& out, const ChoiceDataset& ds) {
  out << "subject_id,pair_id,session,choice\n";
  for (const auto& o : ds.observations()) {
    out << o.subject_id << ',' << o.pair_id << ',' << (index_of(o.session) + 1) << ','
        << (o.choice == Option::A ? 'A' : 'B') << '\n';
  }
}

}  // namespace qdtcal::csv
