#ifndef FRITV_IO_HPP
#define FRITV_IO_HPP

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fritv/mask.hpp"
#include "fritv/phantom.hpp"
#include "fritv/recon.hpp"
#include "fritv/types.hpp"

// All binary formats share one layout: a 4-byte ASCII magic, a single-line
// JSON header terminated by '\n', then a raw little-endian float64 payload.
static_assert(std::endian::native == std::endian::little,
              "binary file formats assume a little-endian host");

namespace fritv {

using json = nlohmann::json;

namespace detail {

inline void write_file_atomic(const std::filesystem::path& path, const std::string& magic,
                              const json& header, const double* payload, std::size_t count) {
    namespace fs = std::filesystem;
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw io_error("cannot open for writing: " + tmp.string());
        out.write(magic.data(), 4);
        const std::string h = header.dump() + "\n";
        out.write(h.data(), static_cast<std::streamsize>(h.size()));
        out.write(reinterpret_cast<const char*>(payload),
                  static_cast<std::streamsize>(count * sizeof(double)));
        if (!out) throw io_error("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw io_error("rename failed: " + path.string() + ": " + ec.message());
}

inline json read_file_header(std::ifstream& in, const std::filesystem::path& path,
                             const std::string& magic) {
    char m[4];
    in.read(m, 4);
    if (!in || std::string(m, 4) != magic)
        throw io_error("bad magic (expected " + magic + "): " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw io_error("missing header line: " + path.string());
    json h = json::parse(line, nullptr, false);
    if (h.is_discarded()) throw io_error("malformed header JSON: " + path.string());
    return h;
}

inline void read_payload(std::ifstream& in, const std::filesystem::path& path, double* payload,
                         std::size_t count) {
    in.read(reinterpret_cast<char*>(payload),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (static_cast<std::size_t>(in.gcount()) != count * sizeof(double))
        throw io_error("truncated payload: " + path.string());
    if (in.peek() != std::ifstream::traits_type::eof())
        throw io_error("trailing bytes after payload: " + path.string());
}

inline std::ifstream open_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open: " + path.string());
    return in;
}

} // namespace detail

// ---------------------------------------------------------------------------
// KSP1: k-space samples on a centered grid. Header: "kx": [-Kx,Kx],
// "ky": [-Ky,Ky], "dtype": "c128", plus caller-supplied metadata.
// Payload: re,im per sample, row-major with kx fastest.
// ---------------------------------------------------------------------------

inline void write_kspace(const std::filesystem::path& path, const KSpaceGrid& g,
                         json meta = json::object()) {
    meta["kx"] = json::array({-g.kx_half, g.kx_half});
    meta["ky"] = json::array({-g.ky_half, g.ky_half});
    meta["dtype"] = "c128";
    detail::write_file_atomic(path, "KSP1", meta,
                              reinterpret_cast<const double*>(g.values.data()),
                              2 * static_cast<std::size_t>(g.size()));
}

struct LoadedKSpace {
    KSpaceGrid grid;
    json header;
};

inline LoadedKSpace read_kspace(const std::filesystem::path& path) {
    std::ifstream in = detail::open_binary(path);
    const json h = detail::read_file_header(in, path, "KSP1");
    auto half = [&](const char* axis) {
        if (!h.contains(axis) || !h[axis].is_array() || h[axis].size() != 2)
            throw io_error(std::string("KSP1 header missing '") + axis + "' interval: " +
                           path.string());
        const int lo = h[axis][0].get<int>(), hi = h[axis][1].get<int>();
        if (lo != -hi || hi < 0 || hi > 16384)
            throw io_error(std::string("KSP1 header has implausible '") + axis + "': " +
                           path.string());
        return hi;
    };
    if (h.value("dtype", "c128") != std::string("c128"))
        throw io_error("KSP1 unknown dtype: " + path.string());
    LoadedKSpace out{KSpaceGrid(half("kx"), half("ky")), h};
    detail::read_payload(in, path, reinterpret_cast<double*>(out.grid.values.data()),
                         2 * static_cast<std::size_t>(out.grid.size()));
    return out;
}

// ---------------------------------------------------------------------------
// FLT1: annihilating-filter coefficients. Header: k1, l1. Payload: re,im per
// coefficient in support index order.
// ---------------------------------------------------------------------------

inline void write_filter(const std::filesystem::path& path, const FilterCoefficients& c,
                         json meta = json::object()) {
    meta["k1"] = c.support.k1;
    meta["l1"] = c.support.l1;
    detail::write_file_atomic(path, "FLT1", meta,
                              reinterpret_cast<const double*>(c.coeffs.data()),
                              2 * static_cast<std::size_t>(c.coeffs.size()));
}

struct LoadedFilter {
    FilterCoefficients coeffs;
    json header;
};

inline LoadedFilter read_filter(const std::filesystem::path& path) {
    std::ifstream in = detail::open_binary(path);
    const json h = detail::read_file_header(in, path, "FLT1");
    if (!h.contains("k1") || !h.contains("l1"))
        throw io_error("FLT1 header missing support: " + path.string());
    const int k1 = h["k1"].get<int>(), l1 = h["l1"].get<int>();
    if (k1 < 0 || l1 < 0 || k1 > 16384 || l1 > 16384)
        throw io_error("FLT1 header has implausible support: " + path.string());
    const FilterSupport s{k1, l1};
    LoadedFilter out{FilterCoefficients::zero(s), h};
    detail::read_payload(in, path, reinterpret_cast<double*>(out.coeffs.coeffs.data()),
                         2 * static_cast<std::size_t>(s.size()));
    return out;
}

// ---------------------------------------------------------------------------
// IMG1: raster image, row-major, rows scan y. Header: nx, ny, dtype ("f64" or
// "c128"). Payload: one double per pixel (f64) or re,im (c128).
// ---------------------------------------------------------------------------

namespace detail {

inline json image_header(int nx, int ny, const char* dtype, json meta) {
    meta["nx"] = nx;
    meta["ny"] = ny;
    meta["dtype"] = dtype;
    return meta;
}

} // namespace detail

inline void write_image(const std::filesystem::path& path, const RMatrix& img,
                        json meta = json::object()) {
    const int nx = static_cast<int>(img.cols()), ny = static_cast<int>(img.rows());
    std::vector<double> buf(static_cast<std::size_t>(nx) * ny);
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix) buf[static_cast<std::size_t>(iy) * nx + ix] = img(iy, ix);
    detail::write_file_atomic(path, "IMG1", detail::image_header(nx, ny, "f64", std::move(meta)),
                              buf.data(), buf.size());
}

inline void write_image(const std::filesystem::path& path, const CMatrix& img,
                        json meta = json::object()) {
    const int nx = static_cast<int>(img.cols()), ny = static_cast<int>(img.rows());
    std::vector<double> buf(2 * static_cast<std::size_t>(nx) * ny);
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix) {
            const std::size_t off = 2 * (static_cast<std::size_t>(iy) * nx + ix);
            buf[off] = img(iy, ix).real();
            buf[off + 1] = img(iy, ix).imag();
        }
    detail::write_file_atomic(path, "IMG1", detail::image_header(nx, ny, "c128", std::move(meta)),
                              buf.data(), buf.size());
}

/// Saves the mask pixels with its provenance recorded in the header.
inline void write_mask(const std::filesystem::path& path, const EdgeMask& mask) {
    json meta{{"kind", "edge_mask"},
              {"method", mask.provenance.method},
              {"delta", mask.provenance.delta},
              {"k1", mask.provenance.support.k1},
              {"l1", mask.provenance.support.l1},
              {"data_kx_half", mask.provenance.kx_half},
              {"data_ky_half", mask.provenance.ky_half}};
    write_image(path, mask.pixels, std::move(meta));
}

struct LoadedImage {
    std::string dtype; ///< "f64" or "c128"
    RMatrix real;      ///< filled when dtype == "f64"
    CMatrix cplx;      ///< filled when dtype == "c128"
    json header;

    /// Pixels as complex regardless of stored dtype.
    CMatrix as_complex() const {
        if (dtype == "c128") return cplx;
        return real.cast<Complex>();
    }
};

inline LoadedImage read_image(const std::filesystem::path& path) {
    std::ifstream in = detail::open_binary(path);
    const json h = detail::read_file_header(in, path, "IMG1");
    if (!h.contains("nx") || !h.contains("ny") || !h.contains("dtype"))
        throw io_error("IMG1 header missing fields: " + path.string());
    const int nx = h["nx"].get<int>(), ny = h["ny"].get<int>();
    const std::string dtype = h["dtype"].get<std::string>();
    if (nx < 1 || ny < 1 || nx > 65536 || ny > 65536)
        throw io_error("IMG1 header has implausible size: " + path.string());
    if (dtype != "f64" && dtype != "c128")
        throw io_error("IMG1 unknown dtype '" + dtype + "': " + path.string());

    LoadedImage out;
    out.dtype = dtype;
    out.header = h;
    const std::size_t n = static_cast<std::size_t>(nx) * ny;
    if (dtype == "f64") {
        std::vector<double> buf(n);
        detail::read_payload(in, path, buf.data(), buf.size());
        out.real.resize(ny, nx);
        for (int iy = 0; iy < ny; ++iy)
            for (int ix = 0; ix < nx; ++ix)
                out.real(iy, ix) = buf[static_cast<std::size_t>(iy) * nx + ix];
    } else {
        std::vector<double> buf(2 * n);
        detail::read_payload(in, path, buf.data(), buf.size());
        out.cplx.resize(ny, nx);
        for (int iy = 0; iy < ny; ++iy)
            for (int ix = 0; ix < nx; ++ix) {
                const std::size_t off = 2 * (static_cast<std::size_t>(iy) * nx + ix);
                out.cplx(iy, ix) = Complex(buf[off], buf[off + 1]);
            }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Phantom descriptions as JSON documents.
// ---------------------------------------------------------------------------

inline json to_json(const PhantomSpec& spec) {
    json ellipses = json::array();
    for (const Ellipse& e : spec.ellipses)
        ellipses.push_back(json{{"center", {e.center_x, e.center_y}},
                                {"semi_axes", {e.semi_a, e.semi_b}},
                                {"angle", e.angle},
                                {"amplitude", e.amplitude}});
    return json{{"name", spec.name}, {"ellipses", std::move(ellipses)}};
}

inline PhantomSpec phantom_from_json(const json& j) {
    if (!j.contains("ellipses") || !j["ellipses"].is_array())
        throw io_error("phantom JSON: missing 'ellipses' array");
    PhantomSpec spec;
    spec.name = j.value("name", "unnamed");
    for (const json& je : j["ellipses"]) {
        Ellipse e;
        try {
            e.center_x = je.at("center").at(0).get<double>();
            e.center_y = je.at("center").at(1).get<double>();
            e.semi_a = je.at("semi_axes").at(0).get<double>();
            e.semi_b = je.at("semi_axes").at(1).get<double>();
            e.angle = je.value("angle", 0.0);
            e.amplitude = je.at("amplitude").get<double>();
        } catch (const json::exception& ex) {
            throw io_error(std::string("phantom JSON: bad ellipse: ") + ex.what());
        }
        spec.ellipses.push_back(e);
    }
    return spec;
}

inline void write_phantom_json(const std::filesystem::path& path, const PhantomSpec& spec) {
    namespace fs = std::filesystem;
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw io_error("cannot open for writing: " + tmp.string());
        out << to_json(spec).dump(2) << "\n";
        if (!out) throw io_error("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw io_error("rename failed: " + path.string() + ": " + ec.message());
}

inline PhantomSpec read_phantom_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open: " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw io_error("malformed phantom JSON: " + path.string());
    return phantom_from_json(j);
}

// ---------------------------------------------------------------------------
// Lambda-sweep tables as CSV.
// ---------------------------------------------------------------------------

inline void write_sweep_csv(const std::filesystem::path& path,
                            const std::vector<SweepRow>& rows) {
    namespace fs = std::filesystem;
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw io_error("cannot open for writing: " + tmp.string());
        out << "lambda,snr_db,objective,iters\n";
        out.precision(17);
        for (const SweepRow& r : rows)
            out << r.lambda << ',' << r.snr_db << ',' << r.objective << ',' << r.iters << '\n';
        if (!out) throw io_error("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw io_error("rename failed: " + path.string() + ": " + ec.message());
}

} // namespace fritv

#endif // FRITV_IO_HPP
