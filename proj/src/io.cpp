#include "mmv/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mmv {
namespace {

void append_row(std::string& out, std::initializer_list<std::string> cells) {
  bool first = true;
  for (const std::string& c : cells) {
    if (!first) out += ',';
    out += c;
    first = false;
  }
  out += '\n';
}

std::string fmt(double x) { return format_double(x); }
std::string fmt(int x) { return std::to_string(x); }

std::string basename_of(const std::string& path) {
  const auto pos = path.find_last_of("/\\");
  return pos == std::string::npos ? path : path.substr(pos + 1);
}

// ---- plot script templates -------------------------------------------------
// Each template is a complete Python program; the emitted script replaces
// @CSV@ with the data file's name. Scripts contain no timestamps, so
// emission is deterministic.

constexpr const char* kPlotPreamble = R"PY(#!/usr/bin/env python3
import csv, math, sys
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "@CSV@"
with open(path) as f:
    rows = [r for r in csv.reader(f) if r and not r[0].startswith("#")]
header, data = rows[0], rows[1:]
col = {name: i for i, name in enumerate(header)}
out = path.rsplit(".", 1)[0] + ".png"
)PY";

constexpr const char* kPlotFreeEnergy = R"PY(
curves = {}
for r in data:
    curves.setdefault(r[col["R"]], []).append((float(r[col["E"]]), float(r[col["F"]])))
fig, ax = plt.subplots(figsize=(7, 5))
for R, pts in sorted(curves.items(), key=lambda kv: float(kv[0])):
    pts.sort()
    ax.semilogx([p[0] for p in pts], [p[1] for p in pts], label=f"R={R}")
ax.set_xlabel("E (mean squared error)")
ax.set_ylabel("free energy F(E)")
ax.legend()
fig.tight_layout()
fig.savefig(out, dpi=150)
print(out)
)PY";

constexpr const char* kPlotProfile = R"PY(
grid = [(float(r[col["E"]]), float(r[col["F"]])) for r in data if r[col["row_type"]] == "grid"]
maxima = [(float(r[col["E"]]), float(r[col["F"]])) for r in data if r[col["row_type"]] == "maximum"]
global_max = [(float(r[col["E"]]), float(r[col["F"]])) for r in data
              if r[col["row_type"]] == "global_maximum"]
fig, ax = plt.subplots(figsize=(7, 5))
ax.semilogx([p[0] for p in grid], [p[1] for p in grid], label="F(E)")
if maxima:
    ax.plot([p[0] for p in maxima], [p[1] for p in maxima], "o", label="local maxima")
if global_max:
    ax.plot([p[0] for p in global_max], [p[1] for p in global_max], "k*",
            markersize=12, label="global maximum")
ax.set_xlabel("E (mean squared error)")
ax.set_ylabel("free energy F(E)")
ax.legend()
fig.tight_layout()
fig.savefig(out, dpi=150)
print(out)
)PY";

constexpr const char* kPlotSeTrace = R"PY(
pts = sorted((int(r[col["iteration"]]), float(r[col["E"]])) for r in data)
fig, ax = plt.subplots(figsize=(7, 5))
ax.semilogy([p[0] for p in pts], [p[1] for p in pts], marker=".")
ax.set_xlabel("iteration")
ax.set_ylabel("predicted MSE")
fig.tight_layout()
fig.savefig(out, dpi=150)
print(out)
)PY";

constexpr const char* kPlotThresholds = R"PY(
curves = {}
for r in data:
    R = float(r[col["R"]])
    if math.isnan(R):
        continue
    curves.setdefault(r[col["kind"]], []).append((float(r[col["delta_dB"]]), R))
fig, ax = plt.subplots(figsize=(7, 5))
styles = {"bp": "o-", "low_noise": "s-", "critical": "^-"}
for kind, pts in sorted(curves.items()):
    pts.sort()
    ax.plot([p[0] for p in pts], [p[1] for p in pts], styles.get(kind, "-"), label=kind)
ax.set_xlabel("noise variance (dB)")
ax.set_ylabel("measurement rate R")
ax.legend()
fig.tight_layout()
fig.savefig(out, dpi=150)
print(out)
)PY";

constexpr const char* kPlotPhaseDiagram = R"PY(
xs = sorted({float(r[col["delta_dB"]]) for r in data})
ys = sorted({float(r[col["R"]]) for r in data})
xi = {v: i for i, v in enumerate(xs)}
yi = {v: i for i, v in enumerate(ys)}
Z = [[math.nan] * len(xs) for _ in ys]
Zr = [[math.nan] * len(xs) for _ in ys]
for r in data:
    i, j = yi[float(r[col["R"]])], xi[float(r[col["delta_dB"]])]
    Z[i][j] = float(r[col["ln_mmse"]])
    Zr[i][j] = float(r[col["region"]])
fig, ax = plt.subplots(figsize=(7, 5))
im = ax.imshow(Z, origin="lower", aspect="auto",
               extent=[min(xs), max(xs), min(ys), max(ys)])
fig.colorbar(im, ax=ax, label="ln(MMSE)")
if len(xs) > 1 and len(ys) > 1:
    ax.contour(xs, ys, Zr, levels=[1.5, 2.5, 3.5], colors="w", linewidths=0.8)
ax.set_xlabel("noise variance (dB)")
ax.set_ylabel("measurement rate R")
fig.tight_layout()
fig.savefig(out, dpi=150)
print(out)
)PY";

constexpr const char* kPlotAmpSweep = R"PY(
import statistics
cells = {}
for r in data:
    key = (float(r[col["delta_dB"]]), float(r[col["R"]]))
    mse = float(r[col["mse"]])
    se = float(r[col["se_mse"]])
    if not math.isnan(mse):
        cells.setdefault(key, {"mse": [], "se": se})["mse"].append(mse)
xs = sorted({k[0] for k in cells})
ys = sorted({k[1] for k in cells})
xi = {v: i for i, v in enumerate(xs)}
yi = {v: i for i, v in enumerate(ys)}
Z = [[math.nan] * len(xs) for _ in ys]
for (d, R), v in cells.items():
    if v["mse"]:
        Z[yi[R]][xi[d]] = math.log(statistics.median(v["mse"]) / v["se"])
fig, ax = plt.subplots(figsize=(7, 5))
im = ax.imshow(Z, origin="lower", aspect="auto",
               extent=[min(xs), max(xs), min(ys), max(ys)])
fig.colorbar(im, ax=ax, label="ln(simulated MSE / predicted MSE)")
ax.set_xlabel("noise variance (dB)")
ax.set_ylabel("measurement rate R")
fig.tight_layout()
fig.savefig(out, dpi=150)
print(out)
)PY";

struct PlotRenderer {
  const char* schema;
  const char* kind;  // "line" or "heatmap"
  const char* body;
};

constexpr PlotRenderer kRenderers[] = {
    {"mmv.free_energy v1", "line", kPlotFreeEnergy},
    {"mmv.profile v1", "line", kPlotProfile},
    {"mmv.se_trace v1", "line", kPlotSeTrace},
    {"mmv.thresholds v1", "line", kPlotThresholds},
    {"mmv.phase_diagram v1", "heatmap", kPlotPhaseDiagram},
    {"mmv.amp_sweep v1", "heatmap", kPlotAmpSweep},
};

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);  // binary: no newline translation
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string csv_free_energy(const std::vector<FreeEnergyProfile>& curves) {
  std::string out = "# schema: mmv.free_energy v1\n";
  append_row(out, {"rho", "J", "delta", "R", "E", "F"});
  for (const FreeEnergyProfile& p : curves)
    for (std::size_t i = 0; i < p.E_grid.size(); ++i)
      append_row(out, {fmt(p.params.prior.rho), fmt(p.params.prior.J), fmt(p.params.delta),
                       fmt(p.params.R), fmt(p.E_grid[i]), fmt(p.F_values[i])});
  return out;
}

std::string csv_profile(const FreeEnergyProfile& p) {
  std::string out = "# schema: mmv.profile v1\n";
  append_row(out, {"row_type", "E", "F"});
  for (std::size_t i = 0; i < p.E_grid.size(); ++i)
    append_row(out, {"grid", fmt(p.E_grid[i]), fmt(p.F_values[i])});
  for (int k = 0; k < static_cast<int>(p.local_maxima.size()); ++k)
    append_row(out, {k == p.global_max_index ? "global_maximum" : "maximum",
                     fmt(p.local_maxima[k].E), fmt(p.local_maxima[k].F)});
  return out;
}

std::string csv_phase_diagram(const PhaseDiagram& diagram) {
  std::string out = "# schema: mmv.phase_diagram v1\n";
  append_row(out, {"delta_dB", "R", "mmse", "mmse_dB", "ln_mmse", "region", "bp_mse"});
  for (const PhaseCell& c : diagram.cells)
    append_row(out, {fmt(c.delta_db), fmt(c.R), fmt(c.mmse), fmt(to_db(c.mmse)),
                     fmt(std::log(c.mmse)), fmt(c.region.value), fmt(c.bp_mse)});
  return out;
}

std::string csv_thresholds(const std::vector<ThresholdCurve>& curves) {
  std::string out = "# schema: mmv.thresholds v1\n";
  append_row(out, {"kind", "delta_dB", "delta", "R"});
  for (const ThresholdCurve& c : curves)
    for (std::size_t i = 0; i < c.delta_grid.size(); ++i)
      append_row(out, {to_string(c.kind), fmt(to_db(c.delta_grid[i])), fmt(c.delta_grid[i]),
                       fmt(c.R_values[i])});
  return out;
}

std::string csv_se_trace(const SeTrace& trace) {
  std::string out = "# schema: mmv.se_trace v1\n";
  append_row(out, {"iteration", "E"});
  for (std::size_t i = 0; i < trace.E_sequence.size(); ++i)
    append_row(out, {fmt(static_cast<int>(i)), fmt(trace.E_sequence[i])});
  return out;
}

std::string csv_amp_sweep(const AmpSweep& sweep) {
  std::string out = "# schema: mmv.amp_sweep v1\n";
  append_row(out,
             {"delta_dB", "R", "setting", "trial", "iterations", "mse", "mse_db", "se_mse",
              "ratio_ln"});
  for (const SweepCell& c : sweep.cells)
    for (const SweepTrial& t : c.trials)
      append_row(out, {fmt(c.delta_db), fmt(c.R), to_string(sweep.setting), fmt(t.trial),
                       fmt(t.iterations), fmt(t.mse), fmt(to_db(t.mse)), fmt(c.se_mse),
                       fmt(std::log(t.mse / c.se_mse))});
  return out;
}

std::string csv_lemma1(const std::vector<Lemma1Row>& rows) {
  std::string out = "# schema: mmv.lemma1 v1\n";
  append_row(out, {"setting", "estimator", "n_mc", "w1", "se1", "w2", "se2", "w3", "se3", "w4",
                   "se4"});
  for (const Lemma1Row& r : rows)
    append_row(out, {to_string(r.setting), to_string(r.estimator), fmt(r.estimate.n_mc),
                     fmt(r.estimate.w1), fmt(r.estimate.se1), fmt(r.estimate.w2),
                     fmt(r.estimate.se2), fmt(r.estimate.w3), fmt(r.estimate.se3),
                     fmt(r.estimate.w4), fmt(r.estimate.se4)});
  return out;
}

std::string csv_mmse(const ProblemParams& params, double mmse_value) {
  std::string out = "# schema: mmv.mmse v1\n";
  append_row(out, {"rho", "J", "delta", "delta_dB", "R", "mmse"});
  append_row(out, {fmt(params.prior.rho), fmt(params.prior.J), fmt(params.delta),
                   fmt(to_db(params.delta)), fmt(params.R), fmt(mmse_value)});
  return out;
}

std::string read_csv_schema(const std::string& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw ConfigError("cannot open csv: " + csv_path);
  std::string line;
  std::getline(in, line);
  const std::string prefix = "# schema: ";
  if (line.rfind(prefix, 0) != 0)
    throw ConfigError("csv has no schema header line: " + csv_path);
  return line.substr(prefix.size());
}

std::string plot_script(const std::string& csv_path, const std::string& kind) {
  const std::string schema = read_csv_schema(csv_path);
  for (const PlotRenderer& r : kRenderers) {
    if (schema != r.schema) continue;
    if (kind != "auto" && kind != r.kind)
      throw ConfigError("plot kind '" + kind + "' does not fit schema '" + schema +
                        "' (expects '" + r.kind + "')");
    std::string script = std::string(kPlotPreamble) + r.body;
    const std::string placeholder = "@CSV@";
    const auto pos = script.find(placeholder);
    script.replace(pos, placeholder.size(), basename_of(csv_path));
    return script;
  }
  throw ConfigError("no plot renderer for csv schema '" + schema + "'");
}

}  // namespace mmv
