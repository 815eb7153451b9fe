#include "stochdisc/data_pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string_view>

#include "stochdisc/errors.hpp"

namespace stochdisc::data {

namespace {

constexpr double kGridTol = 1e-6;

bool same_step(double a, double b) { return std::abs(a - b) <= kGridTol; }

double detect_spacing(const std::vector<double>& times) {
  if (times.size() < 2) throw DomainError("series needs at least 2 points");
  const double step = times[1] - times[0];
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double d = times[i] - times[i - 1];
    if (!(d > 0.0)) throw DomainError("series times must be strictly increasing");
    if (!same_step(d, step)) throw DomainError("series spacing is not uniform");
  }
  return step;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError("not a number: '" + std::string(s) + "'");
  }
  return v;
}

struct Row {
  double time;
  std::optional<double> value;
};

}  // namespace

RawSeries make_raw_series(std::vector<double> times, std::vector<double> values, SeriesKind kind,
                          std::string country) {
  if (times.size() != values.size()) throw DomainError("series times and values differ in length");
  const double step = detect_spacing(times);
  if (!same_step(step, kAnnual) && !same_step(step, kQuarterly)) {
    throw DomainError("series spacing must be annual (1.0) or quarterly (0.25)");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw DomainError("series values must be finite");
    if (kind == SeriesKind::CpiIndex && !(v > 0.0)) throw DomainError("CPI values must be > 0");
  }
  RawSeries s;
  s.times = std::move(times);
  s.values = std::move(values);
  s.kind = kind;
  s.country = std::move(country);
  s.spacing = same_step(step, kAnnual) ? kAnnual : kQuarterly;
  return s;
}

RateSeries make_rate_series(std::vector<double> times, std::vector<double> r, std::string country) {
  if (times.size() != r.size()) throw DomainError("rate series times and values differ in length");
  if (r.size() < kMinRateSamples) {
    throw InsufficientData("rate series needs at least " + std::to_string(kMinRateSamples) + " samples");
  }
  const double step = detect_spacing(times);
  for (double v : r) {
    if (!std::isfinite(v)) throw DomainError("rate values must be finite");
  }
  RateSeries s;
  s.times = std::move(times);
  s.r = std::move(r);
  s.dt = step;
  s.country = std::move(country);
  return s;
}

LoadedSeries parse_series_csv(std::istream& in, SeriesKind kind, const std::string& country) {
  std::vector<Row> rows;
  std::string line;
  bool header_seen = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    if (!header_seen) {
      if (view != "time,value") throw ParseError("expected header 'time,value', got '" + std::string(view) + "'");
      header_seen = true;
      continue;
    }
    const auto comma = view.find(',');
    if (comma == std::string_view::npos || view.find(',', comma + 1) != std::string_view::npos) {
      throw ParseError("line " + std::to_string(line_no) + ": expected two fields");
    }
    const auto t = parse_double(view.substr(0, comma));
    if (!t) throw ParseError("line " + std::to_string(line_no) + ": missing time");
    rows.push_back({*t, parse_double(view.substr(comma + 1))});
  }
  if (!header_seen) throw ParseError("empty CSV input");
  if (rows.size() < 2) throw ParseError("CSV has fewer than 2 data rows");

  // The dominant step between consecutive rows is taken as the grid spacing.
  std::map<long long, std::size_t> step_votes;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double d = rows[i].time - rows[i - 1].time;
    if (!(d > 0.0)) throw ParseError("times must be strictly increasing");
    ++step_votes[std::llround(d * 1e6)];
  }
  const auto best = std::max_element(step_votes.begin(), step_votes.end(),
                                     [](const auto& a, const auto& b) { return a.second < b.second; });
  const double step = static_cast<double>(best->first) * 1e-6;

  std::vector<std::pair<std::size_t, std::size_t>> segments;  // [begin, end) in rows
  std::size_t begin = 0;
  for (std::size_t i = 0; i <= rows.size(); ++i) {
    const bool at_end = i == rows.size();
    const bool breaks = at_end || !rows[i].value ||
                        (i > begin && !same_step(rows[i].time - rows[i - 1].time, step));
    if (!breaks) continue;
    if (i > begin) segments.emplace_back(begin, i);
    begin = (!at_end && !rows[i].value) ? i + 1 : i;
  }
  if (segments.empty()) throw ParseError("CSV contains no values");

  const auto longest = std::max_element(segments.begin(), segments.end(), [](const auto& a, const auto& b) {
    return (a.second - a.first) < (b.second - b.first);
  });
  LoadedSeries out;
  if (segments.size() > 1) {
    std::ostringstream os;
    os << country << ": data has " << segments.size() << " segments separated by gaps; using the longest ("
       << rows[longest->first].time << " to " << rows[longest->second - 1].time << ")";
    out.warnings.push_back(os.str());
  }
  std::vector<double> times, values;
  for (std::size_t i = longest->first; i < longest->second; ++i) {
    times.push_back(rows[i].time);
    values.push_back(*rows[i].value);
  }
  out.series = make_raw_series(std::move(times), std::move(values), kind, country);
  return out;
}

LoadedSeries read_series_csv(const std::filesystem::path& path, SeriesKind kind, const std::string& country) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return parse_series_csv(in, kind, country);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

double to_log_rate(double open_annual_rate) {
  if (!(open_annual_rate > -1.0)) throw DomainError("open annual rate must be > -1");
  return std::log1p(open_annual_rate);
}

InflationSeries inflation_log_rate(const RawSeries& cpi, double window_years) {
  if (!(window_years > 0.0)) throw DomainError("inflation window must be > 0");
  for (double v : cpi.values) {
    if (!(v > 0.0)) throw DomainError("CPI values must be > 0");
  }
  const double ratio = window_years / cpi.spacing;
  const auto lookahead = static_cast<std::size_t>(std::llround(ratio));
  if (std::abs(ratio - static_cast<double>(lookahead)) > 1e-9 || lookahead == 0) {
    throw DomainError("inflation window must be a whole number of sampling steps");
  }
  if (cpi.values.size() < lookahead + kMinRateSamples) {
    throw InsufficientSpan("CPI series too short for a " + std::to_string(window_years) +
                           "-year window: fewer than " + std::to_string(kMinRateSamples) + " points remain");
  }
  InflationSeries out;
  out.spacing = cpi.spacing;
  const std::size_t n = cpi.values.size() - lookahead;
  out.times.assign(cpi.times.begin(), cpi.times.begin() + static_cast<std::ptrdiff_t>(n));
  out.c.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.c[i] = std::log(cpi.values[i + lookahead] / cpi.values[i]) / window_years;
  }
  return out;
}

RateSeries real_rate_series(const RawSeries& nominal, const RawSeries& cpi, double window_years) {
  if (!nominal.country.empty() && !cpi.country.empty() && nominal.country != cpi.country) {
    throw AlignmentError("nominal and CPI series belong to different countries");
  }
  if (!same_step(nominal.spacing, cpi.spacing)) {
    throw AlignmentError("nominal and CPI series have different sampling intervals");
  }
  const double dt = nominal.spacing;
  const auto inflation = inflation_log_rate(cpi, window_years);

  const double offset = (inflation.times.front() - nominal.times.front()) / dt;
  if (std::abs(offset - std::round(offset)) > 1e-6) {
    throw AlignmentError("nominal and CPI grids are not in phase");
  }
  const long long shift = std::llround(offset);  // nominal index = inflation index + shift
  const long long first = std::max<long long>(0, -shift);
  const long long last = std::min<long long>(static_cast<long long>(inflation.c.size()),
                                             static_cast<long long>(nominal.values.size()) - shift);
  if (last - first < static_cast<long long>(kMinRateSamples)) {
    throw AlignmentError("nominal and inflation series overlap in fewer than " +
                         std::to_string(kMinRateSamples) + " points");
  }
  std::vector<double> times, r;
  for (long long i = first; i < last; ++i) {
    const auto ni = static_cast<std::size_t>(i + shift);
    times.push_back(nominal.times[ni]);
    r.push_back(to_log_rate(nominal.values[ni]) - inflation.c[static_cast<std::size_t>(i)]);
  }
  return make_rate_series(std::move(times), std::move(r), nominal.country.empty() ? cpi.country : nominal.country);
}

NegativeRateSummary negative_rate_summary(const RateSeries& series) {
  if (series.r.empty()) throw DomainError("negative_rate_summary: empty series");
  std::size_t negatives = 0;
  double amplitude = 0.0;
  for (double v : series.r) {
    if (v < 0.0) {
      ++negatives;
      amplitude += -v;
    }
  }
  NegativeRateSummary s;
  s.fraction = static_cast<double>(negatives) / static_cast<double>(series.r.size());
  s.total_years = s.fraction * series.span();
  s.mean_negative_amplitude = negatives > 0 ? amplitude / static_cast<double>(negatives) : 0.0;
  return s;
}

}  // namespace stochdisc::data
