#include "nlos/io/csv_formats.hpp"

#include <charconv>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <system_error>

#include "nlos/error.hpp"

namespace nlos::io {
namespace {

constexpr const char* kHistogramFormat = "nlos-histogram/1";

std::string line_field(std::size_t line) { return "line " + std::to_string(line); }

double parse_double(const std::string& s, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ValidationError(line_field(line), "expected a number, got '" + s + "'");
  }
  return v;
}

std::uint64_t parse_unsigned(const std::string& s, std::size_t line) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ValidationError(line_field(line), "expected a non-negative integer, got '" + s + "'");
  }
  return v;
}

void strip_cr(std::string& s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

void write_histogram_csv(std::ostream& out, const TransientHistogram& hist) {
  out << "# format=" << kHistogramFormat << '\n'
      << "# bin_width_s=" << format_double(hist.bin_width_s) << '\n'
      << "# t0_offset_s=" << format_double(hist.t0_offset_s) << '\n'
      << "# pixel=" << std::to_string(hist.pixel_index) << '\n'
      << "# acq_time_s=" << format_double(hist.acq_time_s) << '\n'
      << "# wrap_period_s="
      << (hist.wrap_period_s ? format_double(*hist.wrap_period_s) : std::string("none")) << '\n'
      << "bin_index,counts\n";
  // Integers go through to_string so an imbued locale cannot add grouping.
  for (std::size_t b = 0; b < hist.counts.size(); ++b) {
    out << std::to_string(b) << ',' << std::to_string(hist.counts[b]) << '\n';
  }
}

TransientHistogram read_histogram_csv(std::istream& in) {
  std::map<std::string, std::string> header;
  std::string line;
  std::size_t line_no = 0;
  bool saw_columns = false;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.rfind("# ", 0) == 0) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ValidationError(line_field(line_no), "header without '='");
      header[line.substr(2, eq - 2)] = line.substr(eq + 1);
      continue;
    }
    if (line != "bin_index,counts") {
      throw ValidationError(line_field(line_no), "expected column header 'bin_index,counts'");
    }
    saw_columns = true;
    break;
  }
  if (!saw_columns) throw ValidationError(line_field(line_no), "missing column header");
  if (header["format"] != kHistogramFormat) {
    throw ValidationError("format", "unsupported histogram format '" + header["format"] + "'");
  }
  for (const char* key : {"bin_width_s", "t0_offset_s", "pixel", "acq_time_s", "wrap_period_s"}) {
    if (!header.count(key)) throw ValidationError(key, "missing header line");
  }

  TransientHistogram hist;
  hist.bin_width_s = parse_double(header["bin_width_s"], 0);
  hist.t0_offset_s = parse_double(header["t0_offset_s"], 0);
  hist.pixel_index = parse_unsigned(header["pixel"], 0);
  hist.acq_time_s = parse_double(header["acq_time_s"], 0);
  if (header["wrap_period_s"] != "none") hist.wrap_period_s = parse_double(header["wrap_period_s"], 0);
  if (!(hist.bin_width_s > 0.0)) throw ValidationError("bin_width_s", "must be > 0");

  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ValidationError(line_field(line_no), "expected 'bin,count'");
    const auto index = parse_unsigned(line.substr(0, comma), line_no);
    if (index != hist.counts.size()) {
      throw ValidationError(line_field(line_no), "bin indices must be consecutive from 0");
    }
    hist.counts.push_back(parse_unsigned(line.substr(comma + 1), line_no));
  }
  if (hist.counts.empty()) throw ValidationError("counts", "histogram has no bins");
  return hist;
}

void write_map_csv(std::ostream& out, const ProbabilityMap& map) {
  const GridSpec& g = map.grid();
  out << "# format=nlos-map/1\n"
      << "# x_min=" << format_double(g.x_min) << '\n'
      << "# x_max=" << format_double(g.x_max) << '\n'
      << "# y_min=" << format_double(g.y_min) << '\n'
      << "# y_max=" << format_double(g.y_max) << '\n'
      << "# resolution=" << format_double(g.resolution) << '\n'
      << "# z_plane=" << format_double(g.z_plane) << '\n'
      << "# normalized=" << (map.normalized() ? "true" : "false") << '\n'
      << "x,y,value\n";
  for (std::size_t iy = 0; iy < g.ny(); ++iy) {
    for (std::size_t ix = 0; ix < g.nx(); ++ix) {
      out << format_double(g.cell_x(ix)) << ',' << format_double(g.cell_y(iy)) << ','
          << format_double(map.value(ix, iy)) << '\n';
    }
  }
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
  out << "# format=nlos-sweep/1\n"
      << "step,d2_x_m,baseline_m,object_index,object_x_m,object_y_m,metric,value,trials,"
         "successes,valid\n";
  for (const auto& p : result.points) {
    const std::pair<const char*, double> metrics[] = {
        {"error_x", p.error_x},         {"error_y", p.error_y},
        {"sigma_x", p.sigma_x},         {"sigma_y", p.sigma_y},
        {"pdf_sigma_x", p.pdf_sigma_x}, {"pdf_sigma_y", p.pdf_sigma_y},
    };
    for (const auto& [name, value] : metrics) {
      out << std::to_string(p.step) << ',' << format_double(p.d2_x) << ','
          << format_double(p.baseline) << ',' << std::to_string(p.object_index) << ','
          << format_double(p.object.x) << ',' << format_double(p.object.y) << ',' << name << ','
          << format_double(value) << ',' << std::to_string(p.trials) << ','
          << std::to_string(p.successes) << ',' << (p.valid ? "1" : "0") << '\n';
    }
  }
}

}  // namespace nlos::io
