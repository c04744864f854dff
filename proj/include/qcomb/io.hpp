#pragma once

// Text output: every file opens with "# qcomb <version> config=<hash>".
// Doubles that must round-trip are written with 17 significant digits.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "qcomb/biphoton.hpp"
#include "qcomb/core.hpp"

namespace qcomb {

inline std::string header_line(const std::string& hash) {
    return std::string("# qcomb ") + kVersion + " config=" + hash + "\n";
}

inline nlohmann::json json_header(const std::string& hash) {
    return {{"tool", "qcomb"}, {"version", kVersion}, {"config", hash}};
}

/// %.17g: enough digits to reproduce any double exactly.
inline std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string fmt6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

inline void write_json(const std::filesystem::path& path, const std::string& hash, nlohmann::json body) {
    body["header"] = json_header(hash);
    write_file(path, body.dump(2) + "\n");
}

/// Comma-separated table with a header row.
class CsvWriter {
public:
    explicit CsvWriter(const std::string& hash, std::initializer_list<const char*> columns) {
        buf_ = header_line(hash);
        bool first = true;
        for (const char* c : columns) {
            if (!first) buf_ += ',';
            buf_ += c;
            first = false;
        }
        buf_ += '\n';
    }

    void comment(const std::string& text) { buf_ += "# " + text + "\n"; }

    void row(std::initializer_list<double> values) {
        bool first = true;
        for (double v : values) {
            if (!first) buf_ += ',';
            buf_ += fmt17(v);
            first = false;
        }
        buf_ += '\n';
    }

    void blank() { buf_ += '\n'; }
    const std::string& str() const { return buf_; }
    void save(const std::filesystem::path& path) const { write_file(path, buf_); }

private:
    std::string buf_;
};

/// JSA as an n x n matrix of real parts (rows = signal), followed by the
/// imaginary parts when any is non-zero. The axis is recorded in full
/// precision so the grid round-trips bit-exactly.
inline std::string format_jsa(const JsaGrid& jsa, const std::string& hash) {
    const auto& ax = jsa.axis();
    std::string s = header_line(hash);
    s += "# axis center_thz=" + fmt17(ax.center().thz) + " span_thz=" + fmt17(ax.span()) +
         " n=" + std::to_string(ax.size()) + "\n";
    s += std::string("# normalized=") + (jsa.normalized ? "1" : "0") + "\n";
    const bool complex = !jsa.is_real();
    for (int part = 0; part < (complex ? 2 : 1); ++part) {
        s += part == 0 ? "# block real\n" : "# block imag\n";
        for (std::size_t i = 0; i < ax.size(); ++i) {
            for (std::size_t j = 0; j < ax.size(); ++j) {
                if (j) s += ',';
                const auto v = jsa.amplitude(i, j);
                s += fmt17(part == 0 ? v.real() : v.imag());
            }
            s += '\n';
        }
    }
    return s;
}

inline JsaGrid parse_jsa(std::istream& in) {
    std::string line;
    std::optional<FreqGrid1D> axis;
    bool normalized = false;
    int part = -1;
    std::vector<std::vector<double>> blocks(2);
    while (std::getline(in, line)) {
        if (line.rfind("# axis ", 0) == 0) {
            double c = 0, sp = 0;
            unsigned long n = 0;
            if (std::sscanf(line.c_str(), "# axis center_thz=%lf span_thz=%lf n=%lu", &c, &sp, &n) != 3)
                throw ValidationError("JSA file: malformed axis line");
            axis.emplace(Frequency{c}, sp, n);
        } else if (line.rfind("# normalized=", 0) == 0) {
            normalized = line.back() == '1';
        } else if (line == "# block real") {
            part = 0;
        } else if (line == "# block imag") {
            part = 1;
        } else if (!line.empty() && line[0] != '#') {
            if (part < 0) throw ValidationError("JSA file: data before block marker");
            std::istringstream ls(line);
            std::string tok;
            while (std::getline(ls, tok, ',')) blocks[part].push_back(std::strtod(tok.c_str(), nullptr));
        }
    }
    if (!axis) throw ValidationError("JSA file: missing axis line");
    const std::size_t cells = axis->size() * axis->size();
    if (blocks[0].size() != cells || (!blocks[1].empty() && blocks[1].size() != cells))
        throw ValidationError("JSA file: value count does not match the axis");
    JsaGrid jsa{ComplexGrid(*axis, *axis), normalized};
    for (std::size_t k = 0; k < cells; ++k)
        jsa.amplitude.values()[k] = {blocks[0][k], blocks[1].empty() ? 0.0 : blocks[1][k]};
    return jsa;
}

}  // namespace qcomb
