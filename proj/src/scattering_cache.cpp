#include "cosguide/scattering_cache.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "cosguide/config.hpp"

namespace cosguide {

namespace {

constexpr char kMagic[8] = {'C', 'G', 'S', 'C', '0', '0', '0', '1'};

void write_mat(std::ofstream& out, const MatC& m) {
    std::int64_t rows = m.rows(), cols = m.cols();
    out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
    out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(Cplx) * m.size()));
}

bool read_mat(std::ifstream& in, MatC& m) {
    std::int64_t rows = 0, cols = 0;
    in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
    in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
    if (!in || rows <= 0 || cols <= 0 || rows > 100000 || cols > 100000) return false;
    m.resize(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(Cplx) * m.size()));
    return static_cast<bool>(in);
}

} // namespace

ScatteringCache::ScatteringCache(std::string dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

std::string ScatteringCache::key(const std::string& profile_sig, double k, int n_evan,
                                 int n_slices) const {
    char buf[128];
    std::snprintf(buf, sizeof(buf), ":k=%.17g:ne=%d:ns=%d", k, n_evan, n_slices);
    return hex64(fnv1a64(profile_sig + buf));
}

std::string ScatteringCache::path_for(const std::string& key) const {
    return dir_ + "/" + key + ".bin";
}

std::optional<CellScattering> ScatteringCache::load(const std::string& profile_sig, double k,
                                                    int n_evan, int n_slices) const {
    std::ifstream in(path_for(key(profile_sig, k, n_evan, n_slices)), std::ios::binary);
    if (!in) return std::nullopt;
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) return std::nullopt;

    CellScattering cell;
    double stored_k = 0.0;
    std::int32_t ne = 0, ns = 0, n_prop = 0;
    in.read(reinterpret_cast<char*>(&stored_k), sizeof(stored_k));
    in.read(reinterpret_cast<char*>(&ne), sizeof(ne));
    in.read(reinterpret_cast<char*>(&ns), sizeof(ns));
    in.read(reinterpret_cast<char*>(&n_prop), sizeof(n_prop));
    double basis_offset = 0.0, basis_width = 0.0;
    in.read(reinterpret_cast<char*>(&basis_offset), sizeof(basis_offset));
    in.read(reinterpret_cast<char*>(&basis_width), sizeof(basis_width));
    in.read(reinterpret_cast<char*>(&cell.unitarity_residual), sizeof(double));
    in.read(reinterpret_cast<char*>(&cell.reciprocity_residual), sizeof(double));
    in.read(reinterpret_cast<char*>(&cell.mirror_residual), sizeof(double));
    if (!in || stored_k != k || ne != n_evan || ns != n_slices) return std::nullopt;

    cell.k = k;
    cell.n_evan = ne;
    cell.n_slices = ns;
    cell.basis = make_basis(k, basis_offset, basis_width, ne);
    if (cell.basis.n_prop != n_prop) return std::nullopt;
    if (!read_mat(in, cell.r) || !read_mat(in, cell.t) || !read_mat(in, cell.rp) ||
        !read_mat(in, cell.tp))
        return std::nullopt;
    cell.converged = true;
    return cell;
}

void ScatteringCache::store(const std::string& profile_sig, const CellScattering& cell) const {
    std::string final_path = path_for(key(profile_sig, cell.k, cell.n_evan, cell.n_slices));
    std::string tmp_path = final_path + ".tmp";
    {
        std::ofstream out(tmp_path, std::ios::binary);
        if (!out) return; // cache is best-effort
        out.write(kMagic, sizeof(kMagic));
        out.write(reinterpret_cast<const char*>(&cell.k), sizeof(cell.k));
        std::int32_t ne = cell.n_evan, ns = cell.n_slices, n_prop = cell.basis.n_prop;
        out.write(reinterpret_cast<const char*>(&ne), sizeof(ne));
        out.write(reinterpret_cast<const char*>(&ns), sizeof(ns));
        out.write(reinterpret_cast<const char*>(&n_prop), sizeof(n_prop));
        out.write(reinterpret_cast<const char*>(&cell.basis.offset), sizeof(double));
        out.write(reinterpret_cast<const char*>(&cell.basis.width), sizeof(double));
        out.write(reinterpret_cast<const char*>(&cell.unitarity_residual), sizeof(double));
        out.write(reinterpret_cast<const char*>(&cell.reciprocity_residual), sizeof(double));
        out.write(reinterpret_cast<const char*>(&cell.mirror_residual), sizeof(double));
        write_mat(out, cell.r);
        write_mat(out, cell.t);
        write_mat(out, cell.rp);
        write_mat(out, cell.tp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp_path, final_path, ec);
}

} // namespace cosguide
