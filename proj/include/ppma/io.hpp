// ppma - file formats: field snapshots (`ppma-field v1` header + raw
// little-endian doubles) and per-iteration CSV emission.
#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ppma/grid.hpp"

namespace ppma {

// Header: `ppma-field v1 n p m mode kind`, then row-major little-endian
// 8-byte floats in axis order x_1..x_n, y_1..y_n; complex fields interleave
// re, im. kind is "real" or "complex".
inline void write_field(const std::string& path, const RealField& f, const TorusGrid& grid,
                        int p) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParameterError("write_field: cannot open " + path);
    out << "ppma-field v1 " << grid.n << " " << p << " " << grid.m << " "
        << to_string(grid.mode) << " real\n";
    static_assert(sizeof(double) == 8);
    out.write(reinterpret_cast<const char*>(f.data()),
              static_cast<std::streamsize>(f.size() * sizeof(double)));
}

inline void write_field(const std::string& path, const ComplexField& f,
                        const TorusGrid& grid, int p) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParameterError("write_field: cannot open " + path);
    out << "ppma-field v1 " << grid.n << " " << p << " " << grid.m << " "
        << to_string(grid.mode) << " complex\n";
    std::vector<double> buf(2 * f.size());
    for (long i = 0; i < f.size(); ++i) {
        buf[2 * i] = f(i).real();
        buf[2 * i + 1] = f(i).imag();
    }
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(double)));
}

struct FieldHeader {
    int n = 0, p = 0, m = 0;
    GridMode mode = GridMode::full;
    std::string kind;
};

inline RealField read_field(const std::string& path, FieldHeader* hdr_out = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParameterError("read_field: cannot open " + path);
    std::string line;
    std::getline(in, line);
    std::istringstream hs(line);
    std::string magic, version, mode;
    FieldHeader hdr;
    hs >> magic >> version >> hdr.n >> hdr.p >> hdr.m >> mode >> hdr.kind;
    if (magic != "ppma-field" || version != "v1")
        throw ParameterError("read_field: bad header in " + path);
    hdr.mode = mode == "full" ? GridMode::full : GridMode::reduced;
    if (hdr.kind != "real")
        throw ParameterError("read_field: expected a real field in " + path);
    TorusGrid grid(hdr.n, hdr.m, hdr.mode);
    RealField f(grid.points());
    in.read(reinterpret_cast<char*>(f.data()),
            static_cast<std::streamsize>(f.size() * sizeof(double)));
    if (!in) throw ParameterError("read_field: truncated data in " + path);
    if (hdr_out) *hdr_out = hdr;
    return f;
}

class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::string& header) : out_(path) {
        if (!out_) throw ParameterError("CsvWriter: cannot open " + path);
        out_ << header << "\n";
        out_.precision(17);
    }

    template <typename... Args>
    void row(Args&&... args) {
        bool first = true;
        ((out_ << (first ? "" : ",") << args, first = false), ...);
        out_ << "\n";
    }

private:
    std::ofstream out_;
};

} // namespace ppma
