#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "gmethods/estimators.hpp"
#include "gmethods/eval.hpp"
#include "gmethods/oracle.hpp"
#include "gmethods/weights.hpp"

namespace gmethods {

// Shortest decimal that reads back to the same double; NaN is written as NA.
std::string format_real(double v);
double parse_real_field(std::string_view text);

// scenario,comparison,horizon,theta,mc_se
void write_truth_csv(std::ostream& out, const std::vector<TrueEffects>& truths);
std::vector<TrueEffects> read_truth_csv(std::istream& in);

// method,comparison,horizon,estimate[,se]
void write_estimates_csv(std::ostream& out, const EstimateSet& est);

// time,mean_w,max_w,ess
void write_weights_csv(std::ostream& out, const std::vector<WeightDiagnostics>& diagnostics);

// scenario,replication,method,comparison,horizon,estimate,status,message
void write_raw_csv(std::ostream& out, const ReplicationTable& table);
ReplicationTable read_raw_csv(std::istream& in);

// scenario,method,comparison,horizon,theta,mean,bias,bias_mcse,empse,empse_mcse,n_effective
void write_report_csv(std::ostream& out, const PerformanceReport& report);
PerformanceReport read_report_csv(std::istream& in);

// Opens `path` for writing (creating parent directories) and runs `emit`.
// Throws IoError when the file cannot be written.
void emit_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& emit);

}  // namespace gmethods
