#pragma once

#include <array>
#include <optional>
#include <vector>

#include "lmfem/geometry.hpp"

namespace lmfem {

// ---------------------------------------------------------------------------
// Patch grid
// ---------------------------------------------------------------------------

/// Cartesian grid of square patches covering the domain. Each patch carries
/// 25 nodes on a 5x5 lattice; the global fine lattice has (4n+1)^2 nodes.
struct PatchGrid {
    Point2 origin;
    double patch_size = 0.0;  // h_P
    int n = 0;                // patches per side

    /// Coordinate of fine-lattice line k (k = 0..4n). One formula shared by
    /// all patches so that shared nodes are bit-identical.
    double fine_x(int k) const { return origin.x + double(k) * patch_size * 0.25; }
    double fine_y(int k) const { return origin.y + double(k) * patch_size * 0.25; }
    Point2 fine(int kx, int ky) const { return {fine_x(kx), fine_y(ky)}; }
    Point2 corner(int px, int py) const { return fine(4 * px, 4 * py); }
};

// ---------------------------------------------------------------------------
// Cut classification
// ---------------------------------------------------------------------------

enum class CutKind { Uncut, A, B, C, D, E };

/// Element of the square's symmetry group: canonical corner q maps to local
/// corner (offset + dir*q) mod 4.
struct SquareSymmetry {
    int offset = 0;
    int dir = 1;
    int corner(int q) const { return ((offset + dir * q) % 4 + 4) % 4; }
};

/// Reference to a cut location on the patch boundary: either a vertex id or
/// a local edge id (edge i runs from corner i to corner (i+1)%4, corners
/// counterclockwise from bottom-left).
struct CutRef {
    bool is_vertex = false;
    int id = -1;
};

struct CutConfig {
    CutKind kind = CutKind::Uncut;
    std::array<CutRef, 2> cuts{};  // valid when kind != Uncut
    double r = 0.0;                // canonical relative cut positions
    double s = 0.0;
    SquareSymmetry sym;            // canonical frame -> local frame
};

// ---------------------------------------------------------------------------
// Sub-elements and layouts
// ---------------------------------------------------------------------------

enum class Side { Omega1, Omega2 };  // discrete side: gamma < 0 resp. > 0
enum class Curvature { Straight, QuadraticEdge, LinearFallback };
enum class CellShape { Quad, Tri };

/// Slot ids index the patch's 5x5 node lattice, slot = j*5 + i.
/// Triangles use entries 0..5 (v0 v1 v2, m01 m12 m20); quads use all 9
/// (c0..c3, m01 m12 m23 m30, center).
struct SubElement {
    CellShape shape = CellShape::Tri;
    std::array<int, 9> slots{};
    Side side = Side::Omega2;
    Curvature curvature = Curvature::Straight;

    int node_count() const { return shape == CellShape::Tri ? 6 : 9; }
};

struct PatchNodeLayout {
    std::array<Point2, 25> nodes{};
    std::array<bool, 25> moved{};  // node was rearranged onto Gamma
};

struct PatchData {
    CutConfig config;
    PatchNodeLayout layout;
    std::vector<SubElement> elems;
    // discrete interface pieces as (slot, slot) pairs; the piece's sub-edge
    // midpoint is the node moved in the second rearrangement step
    std::vector<std::array<int, 2>> interface_segments;
    bool fallback = false;  // quadratic rearrangement rejected
};

struct MeshParams {
    double root_tol = 1e-12;        // absolute |gamma| tolerance for cuts
    double vertex_tol_rel = 1e-10;  // * patch diameter
    double alpha_max_deg = 170.0;   // curved-triangle acceptance angle
    double eps_d = 0.005;           // relative-length window for B/C midpoint moves
    bool quadratic = true;          // apply the quadratic rearrangement
};

struct MeshModel {
    PatchGrid grid;
    std::vector<PatchData> patches;  // row-major, py*n + px
    // One cut per global edge, shared by both adjacent patches. Horizontal
    // edge (i,j): fine corners (i,j)->(i+1,j), i<n, j<=n; vertical edge
    // (i,j): (i,j)->(i,j+1), i<=n, j<n. Node cuts are kept in corner_on_gamma.
    std::vector<std::optional<LineCut>> hcuts;
    std::vector<std::optional<LineCut>> vcuts;
    std::vector<bool> corner_on_gamma;  // (n+1)^2 patch corners
    int PN = 0;
    int n_l = 0;

    const PatchData& patch(int px, int py) const { return patches[py * grid.n + px]; }
    int hcut_index(int i, int j) const { return j * grid.n + i; }
    int vcut_index(int i, int j) const { return j * (grid.n + 1) + i; }
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Classifies a single axis-aligned square patch against the level set.
/// Throws AssumptionViolation when the cut pattern is not one of A..E.
CutConfig classify_patch(const LevelSetField& ls, const std::array<Point2, 4>& corners,
                         const MeshParams& params = {});

/// Inputs the layout construction needs beyond the classification: physical
/// corners and the per-edge interface points (cut position on cut edges,
/// edge midpoint otherwise).
struct PatchContext {
    std::array<Point2, 4> corners;
    std::array<Point2, 4> epoints;
    const LevelSetField* ls = nullptr;
    MeshParams params;
    double patch_size = 0.0;
};

/// Fills a PatchContext for a standalone patch (edge cuts recomputed
/// locally; build_mesh shares them through the global tables instead).
PatchContext make_patch_context(const LevelSetField& ls, const std::array<Point2, 4>& corners,
                                const MeshParams& params = {});

/// Straight-edge stage: places the 25 nodes, splits into 4 quads (uncut) or
/// 8 triangles, assigns sides. Throws DegenerateGeometry on zero-area cells.
PatchData build_node_layout(const PatchContext& ctx, const CutConfig& config);

/// Two-step quadratic rearrangement (midpoint of the patch, then interface
/// sub-edge midpoints). On any criterion failure the patch reverts to the
/// straight layout and all its triangles are flagged LinearFallback.
/// Returns false on fallback.
bool apply_quadratic_rearrangement(PatchData& patch, const PatchContext& ctx);

/// Maximum interior angle of a (possibly curved) triangle in degrees. Angles
/// are measured between the edge tangent directions at each vertex.
double check_max_angle(const std::array<Point2, 3>& corners, const std::array<Point2, 3>& mids);

/// Area of a curved P2 triangle by mapped quadrature.
double curved_tri_area(const std::array<Point2, 3>& corners, const std::array<Point2, 3>& mids);

/// Builds the full mesh: classifies every patch, computes every global edge
/// cut once, builds layouts with the quadratic rearrangement, tallies PN and
/// n_l (n_l counts LinearFallback triangles).
MeshModel build_mesh(const PatchGrid& grid, const LevelSetField& ls, const MeshParams& params = {});

}  // namespace lmfem
