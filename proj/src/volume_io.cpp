#include "noisefit/volume_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "noisefit/errors.hpp"

namespace noisefit::io {

namespace {

#pragma pack(push, 1)
struct Nifti1Header {
    std::int32_t sizeof_hdr; // must be 348
    char data_type[10];
    char db_name[18];
    std::int32_t extents;
    std::int16_t session_error;
    char regular;
    char dim_info;
    std::int16_t dim[8];
    float intent_p1, intent_p2, intent_p3;
    std::int16_t intent_code;
    std::int16_t datatype;
    std::int16_t bitpix;
    std::int16_t slice_start;
    float pixdim[8];
    float vox_offset;
    float scl_slope;
    float scl_inter;
    std::int16_t slice_end;
    char slice_code;
    char xyzt_units;
    float cal_max, cal_min;
    float slice_duration;
    float toffset;
    std::int32_t glmax, glmin;
    char descrip[80];
    char aux_file[24];
    std::int16_t qform_code, sform_code;
    float quatern_b, quatern_c, quatern_d;
    float qoffset_x, qoffset_y, qoffset_z;
    float srow_x[4], srow_y[4], srow_z[4];
    char intent_name[16];
    char magic[4];
};
#pragma pack(pop)
static_assert(sizeof(Nifti1Header) == 348, "NIfTI-1 header must pack to 348 bytes");

constexpr std::int16_t kDtU8 = 2;
constexpr std::int16_t kDtI16 = 4;
constexpr std::int16_t kDtF32 = 16;
constexpr std::int16_t kDtF64 = 64;

template <typename T>
void byteswap(T& v) {
    auto* b = reinterpret_cast<std::uint8_t*>(&v);
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
}

void swap_header(Nifti1Header& h) {
    byteswap(h.sizeof_hdr);
    byteswap(h.extents);
    byteswap(h.session_error);
    for (auto& d : h.dim) byteswap(d);
    byteswap(h.intent_p1);
    byteswap(h.intent_p2);
    byteswap(h.intent_p3);
    byteswap(h.intent_code);
    byteswap(h.datatype);
    byteswap(h.bitpix);
    byteswap(h.slice_start);
    for (auto& p : h.pixdim) byteswap(p);
    byteswap(h.vox_offset);
    byteswap(h.scl_slope);
    byteswap(h.scl_inter);
    byteswap(h.slice_end);
    byteswap(h.cal_max);
    byteswap(h.cal_min);
    byteswap(h.slice_duration);
    byteswap(h.toffset);
    byteswap(h.glmax);
    byteswap(h.glmin);
    byteswap(h.qform_code);
    byteswap(h.sform_code);
    byteswap(h.quatern_b);
    byteswap(h.quatern_c);
    byteswap(h.quatern_d);
    byteswap(h.qoffset_x);
    byteswap(h.qoffset_y);
    byteswap(h.qoffset_z);
    for (auto& v : h.srow_x) byteswap(v);
    for (auto& v : h.srow_y) byteswap(v);
    for (auto& v : h.srow_z) byteswap(v);
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string sidecar_path(const std::string& raw_path) {
    const auto dot = raw_path.find_last_of('.');
    const std::string stem = dot == std::string::npos ? raw_path : raw_path.substr(0, dot);
    return stem + ".json";
}

// gzread-based whole-file load; zlib reads plain files transparently.
std::vector<std::uint8_t> read_file(const std::string& path) {
    gzFile f = gzopen(path.c_str(), "rb");
    if (!f) throw LoadError("cannot open " + path);
    std::vector<std::uint8_t> bytes;
    std::uint8_t buf[1 << 16];
    int n;
    while ((n = gzread(f, buf, sizeof(buf))) > 0)
        bytes.insert(bytes.end(), buf, buf + n);
    const bool bad = n < 0;
    gzclose(f);
    if (bad) throw LoadError("decompression failed for " + path);
    return bytes;
}

void write_file(const std::string& path, const void* data, std::size_t size) {
    if (ends_with(path, ".gz")) {
        gzFile f = gzopen(path.c_str(), "wb");
        if (!f) throw IoError("cannot open " + path + " for writing");
        const auto* p = static_cast<const std::uint8_t*>(data);
        std::size_t off = 0;
        while (off < size) {
            const unsigned chunk =
                static_cast<unsigned>(std::min<std::size_t>(size - off, 1u << 30));
            if (gzwrite(f, p + off, chunk) != static_cast<int>(chunk)) {
                gzclose(f);
                throw IoError("write failed for " + path);
            }
            off += chunk;
        }
        gzclose(f);
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!out) throw IoError("write failed for " + path);
}

double decode_sample(const std::uint8_t* p, std::int16_t dtype, bool swapped) {
    switch (dtype) {
        case kDtU8:
            return static_cast<double>(*p);
        case kDtI16: {
            std::int16_t v;
            std::memcpy(&v, p, 2);
            if (swapped) byteswap(v);
            return static_cast<double>(v);
        }
        case kDtF32: {
            float v;
            std::memcpy(&v, p, 4);
            if (swapped) byteswap(v);
            return static_cast<double>(v);
        }
        default: {
            double v;
            std::memcpy(&v, p, 8);
            if (swapped) byteswap(v);
            return v;
        }
    }
}

std::size_t dtype_size(std::int16_t dtype) {
    switch (dtype) {
        case kDtU8: return 1;
        case kDtI16: return 2;
        case kDtF32: return 4;
        case kDtF64: return 8;
        default: return 0;
    }
}

Dtype dtype_from_code(std::int16_t code) {
    switch (code) {
        case kDtU8: return Dtype::u8;
        case kDtI16: return Dtype::i16;
        case kDtF32: return Dtype::f32;
        default: return Dtype::f64;
    }
}

std::int16_t dtype_code(Dtype d) {
    switch (d) {
        case Dtype::u8: return kDtU8;
        case Dtype::i16: return kDtI16;
        case Dtype::f32: return kDtF32;
        default: return kDtF64;
    }
}

Volume4D read_nifti(const std::string& path) {
    std::vector<std::uint8_t> bytes = read_file(path);
    if (bytes.size() < sizeof(Nifti1Header))
        throw LoadError(path + ": file shorter than the 348-byte NIfTI-1 header");

    Nifti1Header hdr;
    std::memcpy(&hdr, bytes.data(), sizeof(hdr));
    bool swapped = false;
    if (hdr.dim[0] < 1 || hdr.dim[0] > 7) {
        swap_header(hdr);
        swapped = true;
        if (hdr.dim[0] < 1 || hdr.dim[0] > 7)
            throw LoadError(path + ": dim[0] invalid in either byte order");
    }
    if (hdr.sizeof_hdr != 348)
        throw LoadError(path + ": sizeof_hdr is not 348");

    const bool magic_n1 = std::memcmp(hdr.magic, "n+1", 4) == 0;
    const bool magic_ni1 = std::memcmp(hdr.magic, "ni1", 4) == 0;
    if (!magic_n1 && !magic_ni1)
        throw LoadError(path + ": magic is neither \"n+1\" nor \"ni1\"");

    const std::size_t elem = dtype_size(hdr.datatype);
    if (elem == 0)
        throw LoadError(path + ": datatype " + std::to_string(hdr.datatype) +
                        " unsupported (expected u8/i16/f32/f64)");

    std::size_t dims[4] = {1, 1, 1, 1};
    for (int i = 1; i <= hdr.dim[0]; ++i) {
        if (hdr.dim[i] < 1) {
            // trailing unused dims are sometimes stored as 0
            if (i > 3 && hdr.dim[i] == 0) continue;
            throw LoadError(path + ": dim[" + std::to_string(i) + "] = " +
                            std::to_string(hdr.dim[i]) + " invalid");
        }
        if (i <= 4)
            dims[i - 1] = static_cast<std::size_t>(hdr.dim[i]);
        else if (hdr.dim[i] > 1)
            throw LoadError(path + ": dim[" + std::to_string(i) + "] > 1 unsupported");
    }

    Volume4D v(dims[0], dims[1], dims[2], dims[3]);
    v.dtype_origin = dtype_from_code(hdr.datatype);
    for (int i = 0; i < 3; ++i)
        v.voxel_dims[i] = hdr.pixdim[i + 1] > 0 ? hdr.pixdim[i + 1] : 1.0;
    const double slope = hdr.scl_slope == 0.0f ? 1.0 : static_cast<double>(hdr.scl_slope);
    const double inter = static_cast<double>(hdr.scl_inter);
    v.scl_slope = slope;
    v.scl_inter = inter;
    v.source_header.assign(reinterpret_cast<std::uint8_t*>(&hdr),
                           reinterpret_cast<std::uint8_t*>(&hdr) + sizeof(hdr));

    const std::uint8_t* payload = nullptr;
    std::size_t payload_size = 0;
    std::vector<std::uint8_t> img_bytes;
    if (magic_n1) {
        const auto offset = static_cast<std::size_t>(hdr.vox_offset);
        if (offset < 348) throw LoadError(path + ": vox_offset below header size");
        if (bytes.size() < offset) throw LoadError(path + ": payload truncated before vox_offset");
        payload = bytes.data() + offset;
        payload_size = bytes.size() - offset;
    } else {
        const auto dot = path.find_last_of('.');
        img_bytes = read_file((dot == std::string::npos ? path : path.substr(0, dot)) + ".img");
        payload = img_bytes.data();
        payload_size = img_bytes.size();
    }

    const std::size_t n = v.size();
    if (payload_size < n * elem)
        throw LoadError(path + ": payload truncated, need " + std::to_string(n * elem) +
                        " bytes for dim " + std::to_string(dims[0]) + "x" +
                        std::to_string(dims[1]) + "x" + std::to_string(dims[2]) + "x" +
                        std::to_string(dims[3]) + ", got " + std::to_string(payload_size));

    for (std::size_t i = 0; i < n; ++i) {
        double val = decode_sample(payload + i * elem, hdr.datatype, swapped);
        val = val * slope + inter;
        if (!std::isfinite(val))
            throw LoadError(path + ": non-finite sample at linear index " + std::to_string(i));
        if (val < 0.0) {
            val = 0.0;
            ++v.negative_clamped;
        }
        v.data[i] = val;
    }
    return v;
}

Volume4D read_raw(const std::string& path) {
    std::ifstream sidecar(sidecar_path(path));
    if (!sidecar) throw LoadError(path + ": missing JSON sidecar " + sidecar_path(path));
    nlohmann::json meta;
    try {
        sidecar >> meta;
    } catch (const nlohmann::json::exception& e) {
        throw LoadError(sidecar_path(path) + ": invalid JSON (" + e.what() + ")");
    }
    if (!meta.contains("shape") || !meta["shape"].is_array())
        throw LoadError(sidecar_path(path) + ": missing \"shape\" array");
    auto shape = meta["shape"].get<std::vector<std::size_t>>();
    while (shape.size() < 4) shape.push_back(1);
    if (shape.size() != 4 || shape[0] == 0 || shape[1] == 0 || shape[2] == 0 || shape[3] == 0)
        throw LoadError(sidecar_path(path) + ": \"shape\" must hold 3 or 4 positive sizes");

    Volume4D v(shape[0], shape[1], shape[2], shape[3]);
    v.dtype_origin = Dtype::f32;
    if (meta.contains("voxel_dims")) {
        auto vd = meta["voxel_dims"].get<std::vector<double>>();
        for (std::size_t i = 0; i < std::min<std::size_t>(3, vd.size()); ++i)
            v.voxel_dims[i] = vd[i];
    }

    std::ifstream f(path, std::ios::binary);
    if (!f) throw LoadError("cannot open " + path);
    std::vector<float> raw(v.size());
    f.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 4));
    if (static_cast<std::size_t>(f.gcount()) != raw.size() * 4)
        throw LoadError(path + ": payload truncated, need " + std::to_string(raw.size() * 4) +
                        " bytes");
    for (std::size_t i = 0; i < raw.size(); ++i) {
        double val = raw[i];
        if (!std::isfinite(val))
            throw LoadError(path + ": non-finite sample at linear index " + std::to_string(i));
        if (val < 0.0) {
            val = 0.0;
            ++v.negative_clamped;
        }
        v.data[i] = val;
    }
    return v;
}

} // namespace

Volume4D read_volume(const std::string& path) {
    if (ends_with(path, ".raw")) return read_raw(path);
    return read_nifti(path);
}

void write_volume(const Volume4D& v, const std::string& path, Dtype dtype) {
    if (v.size() == 0) throw IoError("write_volume: empty volume");

    if (ends_with(path, ".raw")) {
        std::vector<float> raw(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) raw[i] = static_cast<float>(v.data[i]);
        write_file(path, raw.data(), raw.size() * 4);
        nlohmann::json meta{{"shape", {v.nx(), v.ny(), v.nz(), v.nk()}},
                            {"voxel_dims", {v.voxel_dims[0], v.voxel_dims[1], v.voxel_dims[2]}}};
        std::ofstream sidecar(sidecar_path(path));
        if (!sidecar) throw IoError("cannot open " + sidecar_path(path) + " for writing");
        sidecar << meta.dump(2) << "\n";
        if (!sidecar) throw IoError("write failed for " + sidecar_path(path));
        return;
    }

    Nifti1Header hdr;
    std::memset(&hdr, 0, sizeof(hdr));
    if (v.source_header.size() == sizeof(hdr))
        std::memcpy(&hdr, v.source_header.data(), sizeof(hdr)); // echo affine/orientation
    hdr.sizeof_hdr = 348;
    hdr.regular = 'r';
    hdr.dim[0] = v.nk() > 1 ? 4 : 3;
    hdr.dim[1] = static_cast<std::int16_t>(v.nx());
    hdr.dim[2] = static_cast<std::int16_t>(v.ny());
    hdr.dim[3] = static_cast<std::int16_t>(v.nz());
    hdr.dim[4] = static_cast<std::int16_t>(v.nk());
    for (int i = 5; i < 8; ++i) hdr.dim[i] = 1;
    hdr.datatype = dtype_code(dtype);
    hdr.bitpix = static_cast<std::int16_t>(8 * dtype_size(hdr.datatype));
    hdr.pixdim[0] = 1.0f;
    for (int i = 0; i < 3; ++i) hdr.pixdim[i + 1] = static_cast<float>(v.voxel_dims[i]);
    if (hdr.pixdim[4] == 0.0f) hdr.pixdim[4] = 1.0f;
    hdr.vox_offset = 352.0f;
    hdr.scl_slope = 1.0f;
    hdr.scl_inter = 0.0f;
    std::memcpy(hdr.magic, "n+1", 4);

    const std::size_t elem = dtype_size(hdr.datatype);
    std::vector<std::uint8_t> bytes(352 + v.size() * elem, 0);
    std::memcpy(bytes.data(), &hdr, sizeof(hdr));
    std::uint8_t* out = bytes.data() + 352;
    for (std::size_t i = 0; i < v.size(); ++i, out += elem) {
        const double val = v.data[i];
        switch (dtype) {
            case Dtype::u8: {
                const double r = std::nearbyint(val);
                const std::uint8_t b =
                    static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
                *out = b;
                break;
            }
            case Dtype::i16: {
                const double r = std::nearbyint(val);
                const std::int16_t s =
                    static_cast<std::int16_t>(std::clamp(r, -32768.0, 32767.0));
                std::memcpy(out, &s, 2);
                break;
            }
            case Dtype::f32: {
                const float f = static_cast<float>(val);
                std::memcpy(out, &f, 4);
                break;
            }
            case Dtype::f64:
                std::memcpy(out, &val, 8);
                break;
        }
    }
    write_file(path, bytes.data(), bytes.size());
}

ReportFormat report_format_for_path(const std::string& path) {
    return ends_with(path, ".csv") ? ReportFormat::csv : ReportFormat::json;
}

nlohmann::json report_to_json(const std::vector<SliceRecord>& records,
                              const nlohmann::json& metadata) {
    nlohmann::json results = nlohmann::json::array();
    for (const auto& r : records) {
        nlohmann::json j{{"slice_index", r.slice_index},
                         {"voxel_count", r.voxel_count},
                         {"converged", r.converged},
                         {"method", r.method}};
        if (r.error.empty()) {
            j["sigma"] = r.sigma;
            j["n_dof"] = r.n_dof;
        } else {
            j["sigma"] = nullptr;
            j["n_dof"] = nullptr;
            j["error"] = r.error;
        }
        results.push_back(std::move(j));
    }
    return nlohmann::json{{"metadata", metadata}, {"results", std::move(results)}};
}

void write_report(const std::vector<SliceRecord>& records, const nlohmann::json& metadata,
                  const std::string& path, ReportFormat format) {
    if (records.empty()) throw std::invalid_argument("write_report: no records");
    std::ostringstream out;
    if (format == ReportFormat::json) {
        out << report_to_json(records, metadata).dump(2) << "\n";
    } else {
        out << "slice_index,sigma,n_dof,voxel_count,converged,method\n";
        out.precision(17);
        for (const auto& r : records) {
            out << r.slice_index << ",";
            if (r.error.empty())
                out << r.sigma << "," << r.n_dof << ",";
            else
                out << "nan,nan,";
            out << r.voxel_count << "," << (r.converged ? "true" : "false") << "," << r.method
                << "\n";
        }
    }
    const std::string text = out.str();
    write_file(path, text.data(), text.size());
}

std::vector<SliceRecord> read_report(const std::string& path) {
    std::vector<SliceRecord> records;
    if (report_format_for_path(path) == ReportFormat::json) {
        std::ifstream f(path);
        if (!f) throw LoadError("cannot open " + path);
        nlohmann::json j;
        try {
            f >> j;
        } catch (const nlohmann::json::exception& e) {
            throw LoadError(path + ": invalid JSON (" + e.what() + ")");
        }
        if (!j.contains("results")) throw LoadError(path + ": missing \"results\"");
        for (const auto& r : j["results"]) {
            SliceRecord rec;
            rec.slice_index = r.value("slice_index", std::size_t{0});
            rec.voxel_count = r.value("voxel_count", std::size_t{0});
            rec.converged = r.value("converged", false);
            rec.method = r.value("method", std::string{});
            rec.error = r.value("error", std::string{});
            rec.sigma = r["sigma"].is_null() ? std::numeric_limits<double>::quiet_NaN()
                                             : r["sigma"].get<double>();
            rec.n_dof = r["n_dof"].is_null() ? std::numeric_limits<double>::quiet_NaN()
                                             : r["n_dof"].get<double>();
            records.push_back(std::move(rec));
        }
        return records;
    }
    std::ifstream f(path);
    if (!f) throw LoadError("cannot open " + path);
    std::string line;
    if (!std::getline(f, line)) throw LoadError(path + ": empty report");
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        SliceRecord rec;
        std::getline(ss, field, ',');
        rec.slice_index = static_cast<std::size_t>(std::stoull(field));
        std::getline(ss, field, ',');
        rec.sigma = std::stod(field);
        std::getline(ss, field, ',');
        rec.n_dof = std::stod(field);
        std::getline(ss, field, ',');
        rec.voxel_count = static_cast<std::size_t>(std::stoull(field));
        std::getline(ss, field, ',');
        rec.converged = field == "true" || field == "1";
        std::getline(ss, rec.method, ',');
        records.push_back(std::move(rec));
    }
    return records;
}

} // namespace noisefit::io
