#include <cctype>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "mapreplay/bench.hpp"
#include "mapreplay/error.hpp"

namespace mapreplay {

BenchReport summarize(std::string name, const BenchConfig& config, std::vector<VariantResult> variants) {
  BenchReport report;
  report.name = std::move(name);
  report.config = config;
  if (variants.empty()) return report;

  const VariantResult& base = variants.front();
  const bool have_base = !base.excluded && !base.samples_ms.empty();
  if (!have_base) report.warnings.push_back("baseline " + base.variant.label() + " has no samples; speedups omitted");
  const double base_mean = have_base ? mean(base.samples_ms) : 0;

  for (std::size_t i = 0; i < variants.size(); ++i) {
    VariantResult& v = variants[i];
    if (v.excluded) {
      report.warnings.push_back("excluded " + v.variant.label() + ": " + v.excluded_reason);
      continue;
    }
    if (v.samples_ms.empty()) continue;
    v.mean_ms = mean(v.samples_ms);
    const std::uint64_t seed = config.seed + 2 * i;
    if (v.samples_ms.size() >= 2) {
      const Interval ci = bootstrap_ci_mean(v.samples_ms, config.confidence, config.resamples, seed);
      v.half_width_ms = ci.width() / 2;
    } else {
      v.half_width_ms = 0;
    }
    if (i == 0 || !have_base) {
      v.speedup = 1;
      v.diff_ci = {0, 0};
      v.significant = false;
      continue;
    }
    v.speedup = base_mean / v.mean_ms;
    if (v.samples_ms.size() >= 2 && base.samples_ms.size() >= 2) {
      v.diff_ci = bootstrap_ci_diff(v.samples_ms, base.samples_ms, config.confidence, config.resamples, seed + 1);
    } else {
      const double d = v.mean_ms - base_mean;
      v.diff_ci = {d, d};
    }
    v.significant = !v.diff_ci.contains(0);
  }
  report.variants = std::move(variants);
  return report;
}

namespace {

std::string printf_string(const char* fmt, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, x);
  return buf;
}

std::string fixed(double x, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, x);
  return buf;
}

std::string exact(double x) { return printf_string("%.17g", x); }

// Percent-escapes characters that would break the key=value line format.
std::string escape(const std::string& s) {
  std::string out;
  for (unsigned char c : s) {
    if (c == '%' || c == '=' || c == ',' || std::isspace(c) || c < 0x20) {
      char buf[4];
      std::snprintf(buf, sizeof buf, "%%%02X", c);
      out += buf;
    } else {
      out += static_cast<char>(c);
    }
  }
  return out;
}

std::string unescape(const std::string& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size()) {
      out += static_cast<char>(std::stoi(s.substr(i + 1, 2), nullptr, 16));
      i += 2;
    } else {
      out += s[i];
    }
  }
  return out;
}

using Fields = std::map<std::string, std::string>;

Error report_error(std::size_t line, const std::string& what) {
  return Error("compare", "report line " + std::to_string(line) + ": " + what);
}

Fields parse_fields(std::istringstream& in, std::size_t line) {
  Fields f;
  std::string tok;
  while (in >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw report_error(line, "expected key=value, got '" + tok + "'");
    f[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return f;
}

const std::string& field(const Fields& f, const char* key, std::size_t line) {
  auto it = f.find(key);
  if (it == f.end()) throw report_error(line, std::string("missing field ") + key);
  return it->second;
}

double number(const Fields& f, const char* key, std::size_t line) {
  const std::string& v = field(f, key, line);
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw report_error(line, std::string("field ") + key + " is not a number: " + v);
  }
}

std::vector<double> numbers(const std::string& csv) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start < csv.size()) {
    std::size_t end = csv.find(',', start);
    if (end == std::string::npos) end = csv.size();
    out.push_back(std::stod(csv.substr(start, end - start)));
    start = end + 1;
  }
  return out;
}

}  // namespace

std::string format_speedup(double speedup) { return fixed(speedup, 2) + "x"; }

std::string format_cell(double mean_ms, double half_width_ms, std::optional<double> speedup) {
  // Whole milliseconds for large means; more digits keep small replays legible.
  const int d = mean_ms >= 100 ? 0 : mean_ms >= 1 ? 2 : 4;
  std::string s = fixed(mean_ms, d) + "±" + fixed(half_width_ms, d == 0 ? 1 : d);
  if (speedup) s += " (" + format_speedup(*speedup) + ")";
  return s;
}

std::string render_table(const BenchReport& r) {
  std::ostringstream out;
  out << "benchmark";
  for (const VariantResult& v : r.variants) out << " | " << v.variant.label();
  out << "\n" << r.name;
  for (std::size_t i = 0; i < r.variants.size(); ++i) {
    const VariantResult& v = r.variants[i];
    out << " | ";
    if (v.excluded || v.samples_ms.empty()) {
      out << "excluded";
    } else {
      out << format_cell(v.mean_ms, v.half_width_ms, i == 0 ? std::nullopt : std::optional<double>(v.speedup));
      if (v.significant) out << " *";
    }
  }
  out << "\n(ms per replay; * = " << fixed(100 * r.config.confidence, 0)
      << "% bootstrap interval of the difference to the baseline excludes zero)\n";
  for (const std::string& w : r.warnings) out << "warning: " << w << "\n";
  return out.str();
}

std::string serialize_report(const BenchReport& r) {
  std::ostringstream out;
  const BenchConfig& c = r.config;
  out << "bench name=" << escape(r.name) << " runs=" << c.runs << " warmup=" << c.warmup_iters
      << " iters=" << c.measured_iters << " duration=" << exact(c.iter_duration) << " seed=" << c.seed
      << " confidence=" << exact(c.confidence) << " resamples=" << c.resamples << "\n";
  for (std::size_t i = 0; i < r.variants.size(); ++i) {
    const VariantResult& v = r.variants[i];
    out << "variant label=" << escape(v.variant.label()) << " impl=" << escape(v.variant.impl)
        << " dic=" << v.variant.dic;
    if (v.variant.load_factor_milli) out << " lf=" << *v.variant.load_factor_milli;
    out << " baseline=" << (i == 0 ? 1 : 0) << " excluded=" << (v.excluded ? 1 : 0);
    if (v.excluded) {
      out << " reason=" << escape(v.excluded_reason);
    } else {
      out << " mean_ms=" << exact(v.mean_ms) << " half_ms=" << exact(v.half_width_ms)
          << " speedup=" << exact(v.speedup) << " diff_lo=" << exact(v.diff_ci.lo)
          << " diff_hi=" << exact(v.diff_ci.hi) << " significant=" << (v.significant ? 1 : 0)
          << " samples=";
      for (std::size_t k = 0; k < v.samples_ms.size(); ++k) out << (k ? "," : "") << exact(v.samples_ms[k]);
    }
    out << "\n";
  }
  for (const std::string& w : r.warnings) out << "warning text=" << escape(w) << "\n";
  return out.str();
}

std::vector<BenchReport> parse_reports(const std::string& text) {
  std::vector<BenchReport> reports;
  std::istringstream lines(text);
  std::string line;
  std::size_t no = 0;
  while (std::getline(lines, line)) {
    ++no;
    std::istringstream in(line);
    std::string kind;
    if (!(in >> kind) || kind[0] == '#') continue;
    const Fields f = parse_fields(in, no);
    if (kind == "bench") {
      BenchReport r;
      r.name = unescape(field(f, "name", no));
      r.config.runs = static_cast<std::uint32_t>(number(f, "runs", no));
      r.config.warmup_iters = static_cast<std::uint32_t>(number(f, "warmup", no));
      r.config.measured_iters = static_cast<std::uint32_t>(number(f, "iters", no));
      r.config.iter_duration = number(f, "duration", no);
      r.config.seed = std::stoull(field(f, "seed", no));
      r.config.confidence = number(f, "confidence", no);
      r.config.resamples = static_cast<std::uint32_t>(number(f, "resamples", no));
      reports.push_back(std::move(r));
      continue;
    }
    if (reports.empty()) throw report_error(no, "'" + kind + "' record before any bench record");
    BenchReport& r = reports.back();
    if (kind == "variant") {
      VariantResult v;
      v.variant.impl = unescape(field(f, "impl", no));
      v.variant.dic = static_cast<std::uint32_t>(number(f, "dic", no));
      if (f.count("lf")) v.variant.load_factor_milli = static_cast<std::uint32_t>(number(f, "lf", no));
      v.excluded = number(f, "excluded", no) != 0;
      if (v.excluded) {
        v.excluded_reason = f.count("reason") ? unescape(f.at("reason")) : "";
      } else {
        v.mean_ms = number(f, "mean_ms", no);
        v.half_width_ms = number(f, "half_ms", no);
        v.speedup = number(f, "speedup", no);
        v.diff_ci = {number(f, "diff_lo", no), number(f, "diff_hi", no)};
        v.significant = number(f, "significant", no) != 0;
        try {
          v.samples_ms = numbers(field(f, "samples", no));
        } catch (const std::invalid_argument&) {
          throw report_error(no, "malformed samples list");
        }
      }
      r.variants.push_back(std::move(v));
    } else if (kind == "warning") {
      r.warnings.push_back(unescape(field(f, "text", no)));
    } else {
      throw report_error(no, "unknown record kind '" + kind + "'");
    }
  }
  return reports;
}

void write_reports(const std::filesystem::path& path, const std::vector<BenchReport>& reports) {
  std::ofstream out(path, std::ios::trunc);
  for (const BenchReport& r : reports) out << serialize_report(r);
  if (!out) throw IoError("bench", "cannot write report " + path.string());
}

std::vector<BenchReport> read_reports(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("compare", "cannot open report " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_reports(text);
}

namespace {

bool faster(const VariantResult& v) { return v.speedup >= 1; }

}  // namespace

std::string change_symbol(const VariantResult& v) {
  if (v.significant) return faster(v) ? "⊕" : "⊖";
  return faster(v) ? "+" : "-";
}

std::string overlap_symbol(const VariantResult& a, const VariantResult& b) {
  if (faster(a) != faster(b)) return change_symbol(a) + "|" + change_symbol(b);
  if (a.significant && b.significant) return change_symbol(a);
  return faster(a) ? "+" : "-";
}

Concordance compare_reports(const std::vector<BenchReport>& a, const std::vector<BenchReport>& b) {
  Concordance c;
  std::vector<double> xs, ys;
  for (const BenchReport& ra : a) {
    const BenchReport* rb = nullptr;
    for (const BenchReport& r : b) {
      if (r.name == ra.name) rb = &r;
    }
    if (!rb) continue;
    for (std::size_t i = 1; i < ra.variants.size(); ++i) {
      const VariantResult& va = ra.variants[i];
      if (va.excluded) continue;
      for (std::size_t j = 1; j < rb->variants.size(); ++j) {
        const VariantResult& vb = rb->variants[j];
        if (vb.excluded || vb.variant.label() != va.variant.label()) continue;
        ComparedChange ch;
        ch.bench = ra.name;
        ch.label = va.variant.label();
        ch.speedup_a = va.speedup;
        ch.speedup_b = vb.speedup;
        ch.symbol_a = change_symbol(va);
        ch.symbol_b = change_symbol(vb);
        ch.overlap = overlap_symbol(va, vb);
        ch.concordant = faster(va) == faster(vb);
        c.concordant += ch.concordant;
        xs.push_back(va.speedup);
        ys.push_back(vb.speedup);
        c.changes.push_back(std::move(ch));
      }
    }
  }
  c.trials = c.changes.size();
  if (c.trials > 0) {
    c.binomial_p = binomial_test_one_sided(c.concordant, c.trials, 0.5);
    c.proportion = static_cast<double>(c.concordant) / static_cast<double>(c.trials);
    c.cohens_h = cohens_h(c.proportion, 0.5);
  }
  try {
    c.pearson = pearson_r(xs, ys);
  } catch (const StatsError&) {
    c.pearson.reset();
  }
  return c;
}

std::string render_concordance(const Concordance& c) {
  std::ostringstream out;
  out << "benchmark variant speedup_a a speedup_b b overlap\n";
  for (const ComparedChange& ch : c.changes) {
    out << ch.bench << " " << ch.label << " " << format_speedup(ch.speedup_a) << " " << ch.symbol_a << " "
        << format_speedup(ch.speedup_b) << " " << ch.symbol_b << " " << ch.overlap << "\n";
  }
  out << "pearson_r=" << (c.pearson ? fixed(*c.pearson, 3) : std::string("undefined")) << "\n"
      << "concordant=" << c.concordant << "/" << c.trials << "\n"
      << "binomial_p=" << printf_string("%.4g", c.binomial_p) << "\n"
      << "proportion=" << fixed(c.proportion, 3) << "\n"
      << "cohens_h=" << fixed(c.cohens_h, 3) << "\n";
  return out.str();
}

}  // namespace mapreplay
