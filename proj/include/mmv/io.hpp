#pragma once

#include <string>
#include <vector>

#include "mmv/amp.hpp"
#include "mmv/phase.hpp"
#include "mmv/se.hpp"

namespace mmv {

// The one number format used in data files: %.12g, with non-finite values
// spelled "nan" / "inf" / "-inf" regardless of platform.
std::string format_double(double x);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

// CSV builders. Every file starts with a "# schema: mmv.<name> v1" comment
// followed by a header row; identical inputs give byte-identical output.
std::string csv_free_energy(const std::vector<FreeEnergyProfile>& curves);
std::string csv_profile(const FreeEnergyProfile& profile);
std::string csv_phase_diagram(const PhaseDiagram& diagram);
std::string csv_thresholds(const std::vector<ThresholdCurve>& curves);
std::string csv_se_trace(const SeTrace& trace);
std::string csv_amp_sweep(const AmpSweep& sweep);

struct Lemma1Row {
  Setting setting = Setting::mmv1;
  EstimatorSpec estimator = EstimatorSpec::perfect;
  CovarianceEstimate estimate;
};
std::string csv_lemma1(const std::vector<Lemma1Row>& rows);

std::string csv_mmse(const ProblemParams& params, double mmse_value);

// Schema tag from the first line of a CSV produced by this tool, e.g.
// "mmv.phase_diagram v1". Throws ConfigError if the line is missing.
std::string read_csv_schema(const std::string& csv_path);

// Self-contained Python/matplotlib script that renders the CSV (the tool
// itself never renders). kind is "auto", "line", or "heatmap" and must be
// compatible with the schema; schemas without a plot form are rejected
// with ConfigError.
std::string plot_script(const std::string& csv_path, const std::string& kind = "auto");

}  // namespace mmv
