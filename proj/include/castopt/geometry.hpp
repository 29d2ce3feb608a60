#pragma once

// Voxelized casting geometry.
//
// On-disk format (plain text):
//
//     dims nx ny nz
//     spacing 0.004
//
//     <ny rows of nx '0'/'1' characters>     z = 0 slab
//     <blank line>
//     <ny rows>                              z = 1 slab
//     ...
//
// '1' marks metal. Row j of a slab is the y = j line, leftmost character is
// i = 0. Lines starting with '#' are comments. The mask must be non-empty and
// face-connected; empty and disconnected masks raise distinct error types so
// callers can tell a bad export from a bad model.

#include <cstdint>
#include <deque>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "castopt/common.hpp"
#include "castopt/kmeans.hpp"
#include "castopt/text.hpp"

namespace castopt {

struct VoxelGeometry {
    std::array<int, 3> dims{0, 0, 0};  // nx, ny, nz
    double spacing = 0.0;              // cubic cell edge, meters
    std::vector<std::uint8_t> mask;    // x-fastest: ((k*ny)+j)*nx + i

    std::size_t linear_index(int i, int j, int k) const {
        return (static_cast<std::size_t>(k) * static_cast<std::size_t>(dims[1]) +
                static_cast<std::size_t>(j)) *
                   static_cast<std::size_t>(dims[0]) +
               static_cast<std::size_t>(i);
    }

    bool inside(int i, int j, int k) const {
        return i >= 0 && i < dims[0] && j >= 0 && j < dims[1] && k >= 0 && k < dims[2];
    }

    /// Filled test; anything outside the bounding box counts as empty.
    bool filled(int i, int j, int k) const {
        return inside(i, j, k) && mask[linear_index(i, j, k)] != 0;
    }

    std::size_t filled_count() const {
        std::size_t n = 0;
        for (auto m : mask) n += (m != 0);
        return n;
    }

    Vec3 cell_center(int i, int j, int k) const {
        return {(i + 0.5) * spacing, (j + 0.5) * spacing, (k + 0.5) * spacing};
    }
};

/// Outward face direction of a boundary cell.
enum class FaceDir : int { xm = 0, xp = 1, ym = 2, yp = 3, zm = 4, zp = 5 };

inline const char* face_dir_name(FaceDir d) {
    static const char* names[6] = {"-x", "+x", "-y", "+y", "-z", "+z"};
    return names[static_cast<int>(d)];
}

inline std::array<int, 3> face_dir_step(FaceDir d) {
    static const std::array<int, 3> steps[6] = {{-1, 0, 0}, {1, 0, 0},  {0, -1, 0},
                                                {0, 1, 0},  {0, 0, -1}, {0, 0, 1}};
    return steps[static_cast<int>(d)];
}

struct BoundaryFace {
    std::array<int, 3> cell{0, 0, 0};
    FaceDir dir = FaceDir::xm;
    Vec3 centroid{0.0, 0.0, 0.0};
    int domain = -1;  // wall-temperature domain id, set by decompose_wall
};

namespace detail {
inline std::string geom_pos(const std::string& name, std::size_t lineno) {
    return name + ":" + std::to_string(lineno) + ": ";
}
}  // namespace detail

inline VoxelGeometry parse_voxel_geometry(std::istream& in, const std::string& name = "<stream>") {
    VoxelGeometry g;
    std::string line;
    std::size_t lineno = 0;
    bool have_dims = false, have_spacing = false;
    std::vector<std::string> rows;

    while (std::getline(in, line)) {
        ++lineno;
        auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto fields = split(std::string(t), ' ');
        // Collapse repeated spaces.
        std::vector<std::string> tok;
        for (auto& f : fields)
            if (!f.empty()) tok.push_back(f);
        if (!have_dims) {
            if (tok.size() != 4 || tok[0] != "dims")
                throw ParseError(detail::geom_pos(name, lineno) + "expected 'dims nx ny nz'");
            for (int d = 0; d < 3; ++d) {
                long long v = parse_int(tok[static_cast<std::size_t>(d) + 1], "dimension");
                if (v <= 0) throw ParseError(detail::geom_pos(name, lineno) + "dimensions must be positive");
                g.dims[static_cast<std::size_t>(d)] = static_cast<int>(v);
            }
            have_dims = true;
            continue;
        }
        if (!have_spacing) {
            if (tok.size() != 2 || tok[0] != "spacing")
                throw ParseError(detail::geom_pos(name, lineno) + "expected 'spacing <meters>'");
            g.spacing = parse_double(tok[1], "spacing");
            if (!(g.spacing > 0.0))
                throw ParseError(detail::geom_pos(name, lineno) + "spacing must be positive");
            have_spacing = true;
            continue;
        }
        if (tok.size() != 1)
            throw ParseError(detail::geom_pos(name, lineno) + "mask rows must not contain spaces");
        rows.push_back(tok[0]);
    }

    if (!have_dims || !have_spacing) throw ParseError(name + ": missing dims/spacing header");
    const auto [nx, ny, nz] = g.dims;
    if (rows.size() != static_cast<std::size_t>(ny) * static_cast<std::size_t>(nz))
        throw ParseError(name + ": expected " + std::to_string(ny * nz) + " mask rows, got " +
                         std::to_string(rows.size()));

    g.mask.assign(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
                      static_cast<std::size_t>(nz),
                  0);
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j) {
            const auto& row = rows[static_cast<std::size_t>(k) * static_cast<std::size_t>(ny) +
                                   static_cast<std::size_t>(j)];
            if (row.size() != static_cast<std::size_t>(nx))
                throw ParseError(name + ": mask row has " + std::to_string(row.size()) +
                                 " characters, expected " + std::to_string(nx));
            for (int i = 0; i < nx; ++i) {
                char c = row[static_cast<std::size_t>(i)];
                if (c != '0' && c != '1')
                    throw ParseError(name + ": mask rows may contain only '0' and '1'");
                g.mask[g.linear_index(i, j, k)] = (c == '1') ? 1 : 0;
            }
        }
    return g;
}

inline void write_voxel_geometry(std::ostream& out, const VoxelGeometry& g) {
    out << "dims " << g.dims[0] << ' ' << g.dims[1] << ' ' << g.dims[2] << '\n';
    out << "spacing " << fmt_double(g.spacing) << "\n\n";
    for (int k = 0; k < g.dims[2]; ++k) {
        for (int j = 0; j < g.dims[1]; ++j) {
            for (int i = 0; i < g.dims[0]; ++i) out << (g.filled(i, j, k) ? '1' : '0');
            out << '\n';
        }
        if (k + 1 < g.dims[2]) out << '\n';
    }
}

/// Throws EmptyMaskError / DisconnectedMaskError when the mask is unusable.
inline void validate_voxel_geometry(const VoxelGeometry& g) {
    const std::size_t n_filled = g.filled_count();
    if (n_filled == 0) throw EmptyMaskError("geometry mask has no filled cells");

    // Flood fill over face neighbors from the first filled cell.
    std::vector<std::uint8_t> seen(g.mask.size(), 0);
    std::deque<std::array<int, 3>> queue;
    bool started = false;
    for (int k = 0; k < g.dims[2] && !started; ++k)
        for (int j = 0; j < g.dims[1] && !started; ++j)
            for (int i = 0; i < g.dims[0] && !started; ++i)
                if (g.filled(i, j, k)) {
                    queue.push_back({i, j, k});
                    seen[g.linear_index(i, j, k)] = 1;
                    started = true;
                }
    std::size_t reached = 0;
    while (!queue.empty()) {
        auto [i, j, k] = queue.front();
        queue.pop_front();
        ++reached;
        for (int d = 0; d < 6; ++d) {
            auto s = face_dir_step(static_cast<FaceDir>(d));
            int ni = i + s[0], nj = j + s[1], nk = k + s[2];
            if (!g.filled(ni, nj, nk)) continue;
            auto idx = g.linear_index(ni, nj, nk);
            if (!seen[idx]) {
                seen[idx] = 1;
                queue.push_back({ni, nj, nk});
            }
        }
    }
    if (reached != n_filled)
        throw DisconnectedMaskError("geometry mask has " + std::to_string(n_filled - reached) +
                                    " filled cells unreachable from the first component");
}

inline VoxelGeometry load_voxel_geometry(const std::string& path) {
    std::istringstream in(read_file(path));
    VoxelGeometry g = parse_voxel_geometry(in, path);
    validate_voxel_geometry(g);
    return g;
}

/// Every filled-cell face whose neighbor is empty (or outside the box), in a
/// fixed scan order: cells by k, j, i; directions -x,+x,-y,+y,-z,+z.
inline std::vector<BoundaryFace> extract_boundary_faces(const VoxelGeometry& g) {
    std::vector<BoundaryFace> faces;
    const double h = 0.5 * g.spacing;
    for (int k = 0; k < g.dims[2]; ++k)
        for (int j = 0; j < g.dims[1]; ++j)
            for (int i = 0; i < g.dims[0]; ++i) {
                if (!g.filled(i, j, k)) continue;
                for (int d = 0; d < 6; ++d) {
                    auto dir = static_cast<FaceDir>(d);
                    auto s = face_dir_step(dir);
                    if (g.filled(i + s[0], j + s[1], k + s[2])) continue;
                    BoundaryFace f;
                    f.cell = {i, j, k};
                    f.dir = dir;
                    f.centroid = g.cell_center(i, j, k);
                    for (int ax = 0; ax < 3; ++ax)
                        f.centroid[static_cast<std::size_t>(ax)] += h * s[ax];
                    faces.push_back(f);
                }
            }
    return faces;
}

struct WallDecomposition {
    int n_domains = 0;
    std::vector<int> face_domain;  // parallel to the face list
    std::vector<Vec3> centroids;   // domain centroid positions
};

/// Cluster boundary faces into wall-temperature domains by face centroid.
/// Deterministic for a fixed seed; every domain ends up non-empty.
inline WallDecomposition decompose_wall(const std::vector<BoundaryFace>& faces, int n_domains,
                                        std::uint64_t seed) {
    if (faces.empty()) throw ValidationError("decompose_wall: no boundary faces");
    std::vector<Vec3> pts;
    pts.reserve(faces.size());
    for (const auto& f : faces) pts.push_back(f.centroid);
    KMeansResult km = kmeans(pts, n_domains, seed);

    WallDecomposition d;
    d.n_domains = n_domains;
    d.face_domain = km.assignment;
    d.centroids = km.centroids;

    std::vector<std::size_t> count(static_cast<std::size_t>(n_domains), 0);
    for (int c : d.face_domain) count[static_cast<std::size_t>(c)]++;
    for (std::size_t c = 0; c < count.size(); ++c)
        if (count[c] == 0)
            throw ValidationError("decompose_wall: domain " + std::to_string(c) + " is empty");
    return d;
}

inline void stamp_domains(std::vector<BoundaryFace>& faces, const WallDecomposition& d) {
    if (faces.size() != d.face_domain.size())
        throw ValidationError("stamp_domains: face/assignment size mismatch");
    for (std::size_t i = 0; i < faces.size(); ++i) faces[i].domain = d.face_domain[i];
}

/// decomposition.csv: one row per boundary face with its owning cell, outward
/// normal, centroid, and domain id.
inline std::string decomposition_csv(const std::vector<BoundaryFace>& faces) {
    CsvWriter w;
    w.header({"face_index", "cell_i", "cell_j", "cell_k", "normal", "cx", "cy", "cz", "domain_id"});
    for (std::size_t n = 0; n < faces.size(); ++n) {
        const auto& f = faces[n];
        w.row({std::to_string(n), std::to_string(f.cell[0]), std::to_string(f.cell[1]),
               std::to_string(f.cell[2]), face_dir_name(f.dir), fmt_double(f.centroid[0]),
               fmt_double(f.centroid[1]), fmt_double(f.centroid[2]), std::to_string(f.domain)});
    }
    return w.str();
}

}  // namespace castopt
