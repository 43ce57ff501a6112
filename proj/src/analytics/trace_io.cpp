// Copyright (C) 2026 The dcmoe Authors
// SPDX-License-Identifier: Apache-2.0

#include "dcmoe/analytics/trace_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "json.hpp"

namespace dcmoe::analytics {

using nlohmann::json;

Format format_from_name(const std::string& name) {
    if (name == "csv") return Format::Csv;
    if (name == "jsonl") return Format::Jsonl;
    throw std::invalid_argument("unknown trace format '" + name + "'");
}

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) {
        throw TraceIoError("failed to format a floating-point value");
    }
    return std::string(buf, end);
}

namespace {

void check_modality(const std::string& m) {
    if (m.find_first_of(",\"\n\r") != std::string::npos) {
        throw TraceIoError("modality tag '" + m + "' cannot be written to CSV");
    }
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
        fields.push_back(field);
    }
    if (!line.empty() && line.back() == ',') {
        fields.emplace_back();
    }
    return fields;
}

template <typename T>
T parse_number(const std::string& s, const char* what) {
    T value{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw TraceIoError(std::string("malformed ") + what + " field '" + s + "'");
    }
    return value;
}

}  // namespace

void write_trace_csv(const RoutingTrace& trace, std::ostream& out) {
    out << kTraceCsvHeader << '\n';
    for (const auto& r : trace.records()) {
        check_modality(r.modality);
        for (const auto& s : r.slots) {
            out << r.step << ',' << r.layer << ',' << r.token_index << ',' << r.modality << ',' << s.expert_id << ','
                << moe::role_name(s.role) << ',' << format_double(s.gate_prob) << ',' << s.selected_rank << ','
                << r.k << '\n';
        }
    }
    if (!out) {
        throw TraceIoError("failed writing trace CSV");
    }
}

RoutingTrace read_trace_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kTraceCsvHeader) {
        throw TraceIoError("trace CSV is missing the expected header");
    }
    RoutingTrace trace;
    TraceRecord current;
    bool open = false;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 9) {
            throw TraceIoError("trace CSV line " + std::to_string(line_no) + " has " + std::to_string(f.size()) +
                               " fields");
        }
        const auto step = parse_number<std::uint64_t>(f[0], "step");
        const auto layer = parse_number<std::size_t>(f[1], "layer");
        const auto token = parse_number<std::size_t>(f[2], "token_index");
        const auto k = parse_number<std::size_t>(f[8], "k");
        if (!open || current.step != step || current.layer != layer || current.token_index != token) {
            if (open) trace.append(std::move(current));
            current = TraceRecord{};
            current.step = step;
            current.layer = layer;
            current.token_index = token;
            current.modality = f[3];
            current.k = k;
            open = true;
        }
        SlotRecord slot;
        slot.expert_id = parse_number<std::size_t>(f[4], "expert_id");
        slot.role = moe::role_from_name(f[5]);
        slot.gate_prob = parse_number<double>(f[6], "gate_prob");
        slot.selected_rank = parse_number<int>(f[7], "selected_rank");
        current.slots.push_back(slot);
    }
    if (open) trace.append(std::move(current));
    return trace;
}

void write_trace_jsonl(const RoutingTrace& trace, std::ostream& out) {
    for (const auto& r : trace.records()) {
        json slots = json::array();
        for (const auto& s : r.slots) {
            slots.push_back({{"expert_id", s.expert_id},
                             {"role", moe::role_name(s.role)},
                             {"gate_prob", s.gate_prob},
                             {"selected_rank", s.selected_rank}});
        }
        json j = {{"step", r.step},           {"layer", r.layer}, {"token_index", r.token_index},
                  {"modality", r.modality},   {"k", r.k},         {"active_expert_ids", r.active_expert_ids()},
                  {"slots", std::move(slots)}};
        out << j.dump() << '\n';
    }
    if (!out) {
        throw TraceIoError("failed writing trace JSONL");
    }
}

RoutingTrace read_trace_jsonl(std::istream& in) {
    RoutingTrace trace;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            const json j = json::parse(line);
            TraceRecord r;
            r.step = j.at("step").get<std::uint64_t>();
            r.layer = j.at("layer").get<std::size_t>();
            r.token_index = j.at("token_index").get<std::size_t>();
            r.modality = j.at("modality").get<std::string>();
            r.k = j.at("k").get<std::size_t>();
            for (const auto& s : j.at("slots")) {
                r.slots.push_back({s.at("expert_id").get<std::size_t>(),
                                   moe::role_from_name(s.at("role").get<std::string>()),
                                   s.at("gate_prob").get<double>(), s.at("selected_rank").get<int>()});
            }
            trace.append(std::move(r));
        } catch (const json::exception& e) {
            throw TraceIoError(std::string("malformed trace JSONL: ") + e.what());
        }
    }
    return trace;
}

void export_trace(const RoutingTrace& trace, const std::filesystem::path& path, Format format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw TraceIoError("cannot open " + path.string() + " for writing");
    }
    if (format == Format::Csv) {
        write_trace_csv(trace, out);
    } else {
        write_trace_jsonl(trace, out);
    }
}

RoutingTrace import_trace(const std::filesystem::path& path, Format format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw TraceIoError("cannot open " + path.string());
    }
    return format == Format::Csv ? read_trace_csv(in) : read_trace_jsonl(in);
}

void write_report_csv(const ActivationReport& report, std::ostream& out, bool header) {
    if (header) {
        out << "layer,modality,expert_id,count,proportion\n";
    }
    for (const auto& [id, n] : report.counts) {
        out << report.layer << ',' << report.modality.value_or("all") << ',' << id << ',' << n << ','
            << format_double(report.proportion.at(id)) << '\n';
    }
}

}  // namespace dcmoe::analytics
