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

#include "nightlights/sphere_grid.h"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <numbers>

#include "nightlights/errors.h"

namespace nightlights {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

void CheckLevel(int level) {
  if (level < 0 || level > CellId::kMaxLevel) {
    throw InvalidArgumentError("cell level out of range: " +
                               std::to_string(level));
  }
}

uint32_t StToIj(double s, int level) {
  const double scale = std::ldexp(1.0, level);
  const double v = std::floor(s * scale);
  const uint32_t max_ij = (uint32_t{1} << level) - 1;
  if (v <= 0) return 0;
  if (v >= static_cast<double>(max_ij)) return max_ij;
  return static_cast<uint32_t>(v);
}

}  // namespace

double Dot(const Vec3& a, const Vec3& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

Vec3 Cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z,
          a.x * b.y - a.y * b.x};
}

double Norm(const Vec3& a) { return std::sqrt(Dot(a, a)); }

Vec3 Normalized(const Vec3& a) {
  const double n = Norm(a);
  return (1.0 / n) * a;
}

LatLng::LatLng(double lat_deg, double lng_deg) : lat_(lat_deg), lng_(lng_deg) {
  if (!(lat_deg >= -90.0 && lat_deg <= 90.0) ||
      !(lng_deg >= -180.0 && lng_deg <= 180.0)) {
    throw InvalidArgumentError("coordinate out of range: (" +
                               std::to_string(lat_deg) + ", " +
                               std::to_string(lng_deg) + ")");
  }
  if (lng_ == -180.0) lng_ = 180.0;
}

LatLng LatLng::FromUnitVector(const Vec3& p) {
  const double lat = std::atan2(p.z, std::hypot(p.x, p.y)) * kRadToDeg;
  const double lng = std::atan2(p.y, p.x) * kRadToDeg;
  return LatLng(std::clamp(lat, -90.0, 90.0), std::clamp(lng, -180.0, 180.0));
}

Vec3 LatLng::ToUnitVector() const {
  const double phi = lat_ * kDegToRad;
  const double theta = lng_ * kDegToRad;
  const double c = std::cos(phi);
  return {c * std::cos(theta), c * std::sin(theta), std::sin(phi)};
}

double GreatCircleKm(const LatLng& a, const LatLng& b) {
  const double phi1 = a.lat() * kDegToRad;
  const double phi2 = b.lat() * kDegToRad;
  const double dphi = phi2 - phi1;
  const double dlambda = (b.lng() - a.lng()) * kDegToRad;
  const double s1 = std::sin(dphi / 2);
  const double s2 = std::sin(dlambda / 2);
  const double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

double GreatCircleKm(const Vec3& a, const Vec3& b) {
  return kEarthRadiusKm * std::atan2(Norm(Cross(a, b)), Dot(a, b));
}

namespace cube {

int FaceOf(const Vec3& p) {
  const double ax = std::abs(p.x);
  const double ay = std::abs(p.y);
  const double az = std::abs(p.z);
  const double m = std::max({ax, ay, az});
  int best = CellId::kNumFaces;
  if (ax == m) best = std::min(best, p.x >= 0 ? 0 : 3);
  if (ay == m) best = std::min(best, p.y >= 0 ? 1 : 4);
  if (az == m) best = std::min(best, p.z >= 0 ? 2 : 5);
  return best;
}

void FaceXyzToUv(int face, const Vec3& p, double* u, double* v) {
  switch (face) {
    // clang-format off
    case 0:  *u =  p.y / p.x; *v =  p.z / p.x; break;
    case 1:  *u = -p.x / p.y; *v =  p.z / p.y; break;
    case 2:  *u = -p.x / p.z; *v = -p.y / p.z; break;
    case 3:  *u =  p.z / p.x; *v =  p.y / p.x; break;
    case 4:  *u =  p.z / p.y; *v = -p.x / p.y; break;
    default: *u = -p.y / p.z; *v = -p.x / p.z; break;
    // clang-format on
  }
}

Vec3 FaceUvToXyz(int face, double u, double v) {
  switch (face) {
    // clang-format off
    case 0:  return { 1,  u,  v};
    case 1:  return {-u,  1,  v};
    case 2:  return {-u, -v,  1};
    case 3:  return {-1, -v, -u};
    case 4:  return { v, -1, -u};
    default: return { v,  u, -1};
    // clang-format on
  }
}

double UvToSt(double u) {
  if (u >= 0) return 0.5 * std::sqrt(1 + 3 * u);
  return 1 - 0.5 * std::sqrt(1 - 3 * u);
}

double StToUv(double s) {
  if (s >= 0.5) return (1.0 / 3) * (4 * s * s - 1);
  return (1.0 / 3) * (1 - 4 * (1 - s) * (1 - s));
}

}  // namespace cube

CellId CellId::FromFace(int face) {
  if (face < 0 || face >= kNumFaces) {
    throw InvalidArgumentError("face out of range: " + std::to_string(face));
  }
  return CellId((uint64_t{static_cast<unsigned>(face)} << 61) |
                (uint64_t{1} << 60));
}

CellId CellId::FromFaceIJ(int face, uint32_t i, uint32_t j, int level) {
  CheckLevel(level);
  if (face < 0 || face >= kNumFaces) {
    throw InvalidArgumentError("face out of range: " + std::to_string(face));
  }
  if ((uint64_t{i} >> level) != 0 || (uint64_t{j} >> level) != 0) {
    throw InvalidArgumentError("face (i,j) out of range for level");
  }
  uint64_t path = 0;
  for (int d = level - 1; d >= 0; --d) {
    path = (path << 2) | (((i >> d) & 1u) << 1) | ((j >> d) & 1u);
  }
  uint64_t id = uint64_t{static_cast<unsigned>(face)} << 61;
  if (level > 0) id |= path << (61 - 2 * level);
  id |= uint64_t{1} << (60 - 2 * level);
  return CellId(id);
}

CellId CellId::FromPoint(const Vec3& p, int level) {
  CheckLevel(level);
  const int face = cube::FaceOf(p);
  double u, v;
  cube::FaceXyzToUv(face, p, &u, &v);
  const uint32_t i = StToIj(cube::UvToSt(u), level);
  const uint32_t j = StToIj(cube::UvToSt(v), level);
  return FromFaceIJ(face, i, j, level);
}

CellId CellId::FromLatLng(const LatLng& p, int level) {
  return FromPoint(p.ToUnitVector(), level);
}

std::optional<CellId> CellId::FromPacked(uint64_t packed) {
  const CellId c(packed);
  if (!c.is_valid()) return std::nullopt;
  return c;
}

CellId CellId::FromString(std::string_view text) {
  auto bad = [&]() {
    return InvalidArgumentError("malformed cell id: '" + std::string(text) +
                                "'");
  };
  const auto s1 = text.find('/');
  if (s1 == std::string_view::npos) throw bad();
  const auto s2 = text.find('/', s1 + 1);
  if (s2 == std::string_view::npos) throw bad();
  int face = -1, level = -1;
  auto r1 = std::from_chars(text.data(), text.data() + s1, face);
  auto r2 = std::from_chars(text.data() + s1 + 1, text.data() + s2, level);
  if (r1.ec != std::errc() || r1.ptr != text.data() + s1 ||
      r2.ec != std::errc() || r2.ptr != text.data() + s2) {
    throw bad();
  }
  if (face < 0 || face >= kNumFaces || level < 0 || level > kMaxLevel) {
    throw bad();
  }
  const std::string_view digits = text.substr(s2 + 1);
  if (digits.size() != static_cast<std::size_t>(level)) throw bad();
  uint64_t id = uint64_t{static_cast<unsigned>(face)} << 61;
  int shift = 59;
  for (char ch : digits) {
    if (ch < '0' || ch > '3') throw bad();
    id |= uint64_t{static_cast<unsigned>(ch - '0')} << shift;
    shift -= 2;
  }
  id |= uint64_t{1} << (60 - 2 * level);
  return CellId(id);
}

bool CellId::is_valid() const {
  if (id_ == 0 || face() >= kNumFaces) return false;
  const int tz = std::countr_zero(id_);
  return tz <= 60 && tz % 2 == 0;
}

int CellId::level() const { return (60 - std::countr_zero(id_)) / 2; }

int CellId::child_position(int depth) const {
  if (depth < 1 || depth > level()) {
    throw InvalidArgumentError("child depth out of range");
  }
  return static_cast<int>((id_ >> (61 - 2 * depth)) & 3u);
}

uint32_t CellId::i() const {
  uint32_t v = 0;
  const int lvl = level();
  for (int d = 1; d <= lvl; ++d) v = (v << 1) | (child_position(d) >> 1);
  return v;
}

uint32_t CellId::j() const {
  uint32_t v = 0;
  const int lvl = level();
  for (int d = 1; d <= lvl; ++d) v = (v << 1) | (child_position(d) & 1);
  return v;
}

CellId CellId::parent() const {
  if (level() == 0) throw InvalidArgumentError("level-0 cell has no parent");
  const uint64_t new_lsb = lsb() << 2;
  return CellId((id_ & (~new_lsb + 1)) | new_lsb);
}

CellId CellId::parent(int target_level) const {
  CheckLevel(target_level);
  if (target_level > level()) {
    throw InvalidArgumentError("parent level exceeds cell level");
  }
  const uint64_t new_lsb = uint64_t{1} << (60 - 2 * target_level);
  return CellId((id_ & (~new_lsb + 1)) | new_lsb);
}

CellId CellId::child(int position) const {
  if (level() >= kMaxLevel) {
    throw InvalidArgumentError("level-30 cell has no children");
  }
  if (position < 0 || position > 3) {
    throw InvalidArgumentError("child position out of range");
  }
  const uint64_t new_lsb = lsb() >> 2;
  return CellId(id_ - lsb() +
                (2 * static_cast<uint64_t>(position) + 1) * new_lsb);
}

std::array<CellId, 4> CellId::children() const {
  return {child(0), child(1), child(2), child(3)};
}

bool CellId::contains(const CellId& other) const {
  const uint64_t l = lsb();
  return other.id_ >= id_ - (l - 1) && other.id_ <= id_ + (l - 1);
}

bool CellId::Contains(const LatLng& p) const {
  return FromLatLng(p, level()) == *this;
}

std::string CellId::ToString() const {
  const int lvl = level();
  std::string out = std::to_string(face()) + "/" + std::to_string(lvl) + "/";
  for (int d = 1; d <= lvl; ++d) {
    out.push_back(static_cast<char>('0' + child_position(d)));
  }
  return out;
}

namespace {

// (u,v) bounds of the cell.
void CellUvBounds(const CellId& cell, double* u0, double* u1, double* v0,
                  double* v1) {
  const double scale = std::ldexp(1.0, -cell.level());
  const double i = cell.i();
  const double j = cell.j();
  *u0 = cube::StToUv(i * scale);
  *u1 = cube::StToUv((i + 1) * scale);
  *v0 = cube::StToUv(j * scale);
  *v1 = cube::StToUv((j + 1) * scale);
}

}  // namespace

std::array<Vec3, 4> CellVertices(const CellId& cell) {
  double u0, u1, v0, v1;
  CellUvBounds(cell, &u0, &u1, &v0, &v1);
  const int f = cell.face();
  return {Normalized(cube::FaceUvToXyz(f, u0, v0)),
          Normalized(cube::FaceUvToXyz(f, u1, v0)),
          Normalized(cube::FaceUvToXyz(f, u1, v1)),
          Normalized(cube::FaceUvToXyz(f, u0, v1))};
}

Vec3 CellCenterPoint(const CellId& cell) {
  double u0, u1, v0, v1;
  CellUvBounds(cell, &u0, &u1, &v0, &v1);
  return Normalized(
      cube::FaceUvToXyz(cell.face(), 0.5 * (u0 + u1), 0.5 * (v0 + v1)));
}

double TriangleExcess(const Vec3& a, const Vec3& b, const Vec3& c) {
  const double num = std::abs(Dot(a, Cross(b, c)));
  const double den = 1.0 + Dot(a, b) + Dot(b, c) + Dot(c, a);
  return 2.0 * std::atan2(num, den);
}

double CellAreaKm2(const CellId& cell) {
  const auto v = CellVertices(cell);
  const double sr = TriangleExcess(v[0], v[1], v[2]) +
                    TriangleExcess(v[0], v[2], v[3]);
  return sr * kEarthRadiusKm * kEarthRadiusKm;
}

CellGeometry GetCellGeometry(const CellId& cell) {
  const auto v = CellVertices(cell);
  const double sr = TriangleExcess(v[0], v[1], v[2]) +
                    TriangleExcess(v[0], v[2], v[3]);
  return CellGeometry{
      LatLng::FromUnitVector(CellCenterPoint(cell)),
      {LatLng::FromUnitVector(v[0]), LatLng::FromUnitVector(v[1]),
       LatLng::FromUnitVector(v[2]), LatLng::FromUnitVector(v[3])},
      sr * kEarthRadiusKm * kEarthRadiusKm};
}

}  // namespace nightlights
