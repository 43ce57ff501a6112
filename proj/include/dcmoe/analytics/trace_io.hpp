// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "dcmoe/analytics/reports.hpp"
#include "dcmoe/analytics/trace.hpp"

namespace dcmoe::analytics {

enum class Format { Csv, Jsonl };

Format format_from_name(const std::string& name);

class TraceIoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Header of the slot-level CSV export.
inline constexpr const char* kTraceCsvHeader = "step,layer,token_index,modality,expert_id,role,gate_prob,selected_rank,k";

/// One row per assignment slot; floats use the shortest round-trip form so an
/// import followed by an export reproduces the file byte for byte.
void write_trace_csv(const RoutingTrace& trace, std::ostream& out);
RoutingTrace read_trace_csv(std::istream& in);

/// One JSON object per token record.
void write_trace_jsonl(const RoutingTrace& trace, std::ostream& out);
RoutingTrace read_trace_jsonl(std::istream& in);

void export_trace(const RoutingTrace& trace, const std::filesystem::path& path, Format format);
RoutingTrace import_trace(const std::filesystem::path& path, Format format);

/// Columns: layer,modality,expert_id,count,proportion
void write_report_csv(const ActivationReport& report, std::ostream& out, bool header = true);

std::string format_double(double v);

}  // namespace dcmoe::analytics
