// Copyright 2026 The Nightlights Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Hierarchical cube-sphere cells.
//
// The sphere is projected onto the six faces of a bounding cube. Each face is
// recursively split into four children in (s,t) space, where (s,t) is related
// to the face's gnomonic (u,v) coordinates by a quadratic transform that
// keeps cell areas within a factor of about two of each other. Face numbering
// and per-face (u,v) axes follow the usual S2 conventions; children are
// ordered in Morton (not Hilbert) order.
//
// Packed 64-bit layout, most significant bit first:
//
//   [ face:3 ][ path: 2 bits per level ][ 1 ][ zeros ]
//
// so a level-L cell has its sentinel bit at position 60 - 2L. Each path digit
// is 2*i_bit + j_bit for the cell's (i,j) position on its face.

#ifndef NIGHTLIGHTS_SPHERE_GRID_H_
#define NIGHTLIGHTS_SPHERE_GRID_H_

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace nightlights {

inline constexpr double kEarthRadiusKm = 6371.0;

struct Vec3 {
  double x = 0, y = 0, z = 0;

  friend Vec3 operator+(const Vec3& a, const Vec3& b) {
    return {a.x + b.x, a.y + b.y, a.z + b.z};
  }
  friend Vec3 operator-(const Vec3& a, const Vec3& b) {
    return {a.x - b.x, a.y - b.y, a.z - b.z};
  }
  friend Vec3 operator*(double s, const Vec3& a) {
    return {s * a.x, s * a.y, s * a.z};
  }
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

double Dot(const Vec3& a, const Vec3& b);
Vec3 Cross(const Vec3& a, const Vec3& b);
double Norm(const Vec3& a);
Vec3 Normalized(const Vec3& a);

// Geographic coordinate in degrees. Latitude in [-90, 90], longitude in
// (-180, 180]; a longitude of exactly -180 is stored as 180.
class LatLng {
 public:
  // Throws InvalidArgumentError outside [-90, 90] x [-180, 180] or for NaN.
  LatLng(double lat_deg, double lng_deg);

  static LatLng FromUnitVector(const Vec3& p);

  double lat() const { return lat_; }
  double lng() const { return lng_; }
  Vec3 ToUnitVector() const;

  friend bool operator==(const LatLng&, const LatLng&) = default;

 private:
  double lat_;
  double lng_;
};

// Haversine distance on a sphere of radius kEarthRadiusKm.
double GreatCircleKm(const LatLng& a, const LatLng& b);

// Great-circle distance between two unit vectors, in km.
double GreatCircleKm(const Vec3& a, const Vec3& b);

class CellId {
 public:
  static constexpr int kNumFaces = 6;
  static constexpr int kMaxLevel = 30;

  // The invalid cell (packed id 0).
  constexpr CellId() = default;

  // Wraps a packed id without validation; see is_valid().
  constexpr explicit CellId(uint64_t packed) : id_(packed) {}

  static CellId FromFace(int face);
  // (i, j) are the cell's integer coordinates on the face at `level`.
  static CellId FromFaceIJ(int face, uint32_t i, uint32_t j, int level);
  // Points exactly on a face boundary belong to the lowest-numbered face.
  static CellId FromPoint(const Vec3& p, int level);
  static CellId FromLatLng(const LatLng& p, int level);
  // Parses the canonical "F/L/digits" form. Throws InvalidArgumentError.
  static CellId FromString(std::string_view text);
  // Validating variant of the packed constructor.
  static std::optional<CellId> FromPacked(uint64_t packed);

  constexpr uint64_t id() const { return id_; }
  bool is_valid() const;

  int face() const { return static_cast<int>(id_ >> 61); }
  int level() const;
  // Path digit (0..3) chosen when descending to `depth` (1..level()).
  int child_position(int depth) const;
  uint32_t i() const;
  uint32_t j() const;

  // Requires level() > 0 (resp. level() >= target); throws otherwise.
  CellId parent() const;
  CellId parent(int target_level) const;
  // Requires level() < kMaxLevel; throws otherwise.
  std::array<CellId, 4> children() const;
  CellId child(int position) const;

  // True if `other` is this cell or one of its descendants.
  bool contains(const CellId& other) const;
  // Exact test in face (s,t) space; consistent with FromLatLng.
  bool Contains(const LatLng& p) const;

  // Canonical text form: face/level/path digits, e.g. "3/4/0213".
  std::string ToString() const;

  friend constexpr auto operator<=>(const CellId&, const CellId&) = default;

 private:
  uint64_t lsb() const { return id_ & (~id_ + 1); }

  uint64_t id_ = 0;
};

struct CellGeometry {
  LatLng centroid;
  // Counter-clockwise as seen from outside the sphere.
  std::array<LatLng, 4> vertices;
  double area_km2;
};

// Centroid is the projected center of the cell's (u,v) rectangle. Area is the
// spherical excess of the four-vertex geodesic polygon (cell edges are great
// circle arcs) scaled by kEarthRadiusKm^2.
CellGeometry GetCellGeometry(const CellId& cell);

// Unit vectors of the four corners, counter-clockwise.
std::array<Vec3, 4> CellVertices(const CellId& cell);
Vec3 CellCenterPoint(const CellId& cell);
double CellAreaKm2(const CellId& cell);

// Spherical excess (steradians) of the triangle abc on the unit sphere.
double TriangleExcess(const Vec3& a, const Vec3& b, const Vec3& c);

// Face-coordinate transforms, exposed for tests and rasterization.
namespace cube {

// Face whose axis dominates `p`, lowest-numbered on ties.
int FaceOf(const Vec3& p);
void FaceXyzToUv(int face, const Vec3& p, double* u, double* v);
Vec3 FaceUvToXyz(int face, double u, double v);
double UvToSt(double u);
double StToUv(double s);

}  // namespace cube

}  // namespace nightlights

template <>
struct std::hash<nightlights::CellId> {
  std::size_t operator()(const nightlights::CellId& c) const noexcept {
    return std::hash<uint64_t>()(c.id() * 0x9e3779b97f4a7c15ULL);
  }
};

#endif  // NIGHTLIGHTS_SPHERE_GRID_H_
