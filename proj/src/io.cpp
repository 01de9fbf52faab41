#include "mwlab/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace mwlab {

namespace {

void write_doubles_le(std::ofstream& out, const double* data, std::size_t count) {
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * 8));
        return;
    }
    for (std::size_t i = 0; i < count; ++i) {
        std::uint64_t bits = std::bit_cast<std::uint64_t>(data[i]);
        char bytes[8];
        for (int b = 0; b < 8; ++b) bytes[b] = static_cast<char>((bits >> (8 * b)) & 0xff);
        out.write(bytes, 8);
    }
}

void read_doubles_le(std::ifstream& in, double* data, std::size_t count) {
    if constexpr (std::endian::native == std::endian::little) {
        in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * 8));
        if (!in) throw InvalidInputError("truncated binary payload");
        return;
    }
    for (std::size_t i = 0; i < count; ++i) {
        char bytes[8];
        in.read(bytes, 8);
        if (!in) throw InvalidInputError("truncated binary payload");
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b)
            bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[b])) << (8 * b);
        data[i] = std::bit_cast<double>(bits);
    }
}

nlohmann::json read_header_line(std::ifstream& in, const std::string& path) {
    std::string line;
    if (!std::getline(in, line)) throw InvalidInputError("missing header line: " + path);
    return nlohmann::json::parse(line);
}

}  // namespace

void write_gfn(const std::string& path, const GridFunction& f) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInputError("cannot open for writing: " + path);
    nlohmann::ordered_json header;
    header["d"] = f.geometry().d;
    header["L"] = f.geometry().L;
    header["n"] = f.vdim();
    out << header.dump() << "\n";
    write_doubles_le(out, f.raw().data(), f.raw().size());
}

GridFunction read_gfn(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInputError("cannot open: " + path);
    nlohmann::json header = read_header_line(in, path);
    GridGeometry g(header.at("d").get<int>(), header.at("L").get<int>());
    GridFunction f(g, header.at("n").get<int>());
    read_doubles_le(in, f.raw().data(), f.raw().size());
    if (!f.all_finite()) throw InvalidInputError("non-finite payload: " + path);
    return f;
}

void write_mwt(const std::string& path, const MatrixWeight& w) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInputError("cannot open for writing: " + path);
    nlohmann::ordered_json header;
    header["d"] = w.geometry().d;
    header["L"] = w.geometry().L;
    header["n"] = w.vdim();
    header["kind"] = w.kind;
    header["params"] = w.params;
    header["seed"] = w.seed;
    out << header.dump() << "\n";
    const int n = w.vdim();
    std::vector<double> cell(static_cast<std::size_t>(n) * n);
    for (std::int64_t c = 0; c < w.geometry().cell_count(); ++c) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) cell[static_cast<std::size_t>(i) * n + j] = w.cell(c)(i, j);
        write_doubles_le(out, cell.data(), cell.size());
    }
}

MatrixWeight read_mwt(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInputError("cannot open: " + path);
    nlohmann::json header = read_header_line(in, path);
    GridGeometry g(header.at("d").get<int>(), header.at("L").get<int>());
    const int n = header.at("n").get<int>();
    MatrixWeight w(g, n);
    std::vector<double> cell(static_cast<std::size_t>(n) * n);
    for (std::int64_t c = 0; c < g.cell_count(); ++c) {
        read_doubles_le(in, cell.data(), cell.size());
        Mat m(n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m(i, j) = cell[static_cast<std::size_t>(i) * n + j];
        w.set_cell(c, m);
    }
    w.finalize();
    w.kind = header.value("kind", "raw");
    if (header.contains("params"))
        for (auto& [k, v] : header.at("params").items()) w.params[k] = v.get<double>();
    w.seed = header.value("seed", std::uint64_t{0});
    return w;
}

}  // namespace mwlab
