/* SPDX-License-Identifier: Apache-2.0 */
#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>
#include <png.h>

#include "parabolica/geometry.hpp"
#include "parabolica/oracle.hpp"
#include "parabolica/pixel.hpp"

// Scene files, the on-disk picture cache, raster output, and picture
// comparison in the band sense.

namespace parabolica {

struct SchemaError : std::runtime_error {
  explicit SchemaError(const std::string& msg)
      : std::runtime_error("scene schema: " + msg) {}
};

struct CacheCorrupt : std::runtime_error {
  explicit CacheCorrupt(const std::string& path)
      : std::runtime_error("cache entry unreadable: " + path) {}
};

struct IoFailure : std::runtime_error {
  explicit IoFailure(const std::string& msg)
      : std::runtime_error("io: " + msg) {}
};

struct ViewportMismatch : std::runtime_error {
  ViewportMismatch() : std::runtime_error("images cover different grids") {}
};

// ---------------------------------------------------------------------------
// Scene files

namespace detail {

inline mpq_class parse_q(const nlohmann::json& v, const char* what) {
  try {
    if (v.is_number_integer()) return mpq_class(v.get<long>());
    if (v.is_string()) {
      mpq_class q;
      if (q.set_str(v.get<std::string>(), 10) != 0)
        throw SchemaError(std::string(what) + ": not a rational");
      q.canonicalize();
      return q;
    }
  } catch (const SchemaError&) {
    throw;
  } catch (...) {
  }
  throw SchemaError(std::string(what) + ": expected integer or \"p/q\"");
}

inline QPoint parse_point(const nlohmann::json& v, const char* what) {
  if (!v.is_array() || v.size() != 2)
    throw SchemaError(std::string(what) + ": expected [re, im]");
  return {parse_q(v[0], what), parse_q(v[1], what)};
}

inline std::vector<std::pair<double, double>> parse_axes(
    const nlohmann::json& v, const char* what) {
  if (!v.is_array() || v.empty())
    throw SchemaError(std::string(what) + ": expected a list of unit vectors");
  std::vector<std::pair<double, double>> out;
  for (const auto& a : v) {
    if (!a.is_array() || a.size() != 2)
      throw SchemaError(std::string(what) + ": axis must be [x, y]");
    out.push_back({a[0].get<double>(), a[1].get<double>()});
  }
  return out;
}

inline std::vector<mpq_class> parse_poly(const nlohmann::json& v,
                                         const char* what) {
  if (!v.is_array() || v.empty())
    throw SchemaError(std::string(what) + ": expected coefficient list");
  std::vector<mpq_class> out;
  for (const auto& c : v) out.push_back(parse_q(c, what));
  return out;
}

inline uint64_t fnv64(const void* data, size_t len, uint64_t h = 0xcbf29ce484222325ULL) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

// binary cache entry for a coarse picture
inline bool read_picture_cache(const std::string& path, CoarsePicture& pic) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  char magic[8] = {};
  in.read(magic, 8);
  if (std::string(magic, 8) != "PBPIC02\n") throw CacheCorrupt(path);
  int64_t hdr[4] = {};
  in.read(reinterpret_cast<char*>(hdr), sizeof hdr);
  if (!in || hdr[2] <= 0 || hdr[2] > (1 << 20)) throw CacheCorrupt(path);
  CoarsePicture p;
  p.c_pix = int(hdr[0]);
  p.grid_radius = long(hdr[1]);
  p.W = long(hdr[2]);
  p.budget_used = long(hdr[3]);
  p.cls.resize(size_t(p.W) * p.W);
  in.read(reinterpret_cast<char*>(p.cls.data()), std::streamsize(p.cls.size()));
  p.certified.resize(p.cls.size());
  in.read(reinterpret_cast<char*>(p.certified.data()),
          std::streamsize(p.certified.size()));
  uint64_t want = 0;
  in.read(reinterpret_cast<char*>(&want), sizeof want);
  if (!in) throw CacheCorrupt(path);
  uint64_t got = fnv64(hdr, sizeof hdr);
  got = fnv64(p.cls.data(), p.cls.size(), got);
  got = fnv64(p.certified.data(), p.certified.size(), got);
  if (got != want) throw CacheCorrupt(path);
  for (uint8_t c : p.cls)
    if (c > CoarsePicture::kDrawn) throw CacheCorrupt(path);
  for (size_t t = 0; t < p.cls.size(); ++t)
    if (p.certified[t] > 1 ||
        (p.certified[t] && p.cls[t] != CoarsePicture::kDrawn))
      throw CacheCorrupt(path);
  p.compute_dt();
  pic = std::move(p);
  return true;
}

inline void write_picture_cache(const std::string& path,
                                const CoarsePicture& pic) {
  std::ofstream out(path + ".tmp", std::ios::binary | std::ios::trunc);
  if (!out) return;  // caching is best effort
  out.write("PBPIC02\n", 8);
  int64_t hdr[4] = {pic.c_pix, pic.grid_radius, pic.W, pic.budget_used};
  out.write(reinterpret_cast<const char*>(hdr), sizeof hdr);
  out.write(reinterpret_cast<const char*>(pic.cls.data()),
            std::streamsize(pic.cls.size()));
  out.write(reinterpret_cast<const char*>(pic.certified.data()),
            std::streamsize(pic.certified.size()));
  uint64_t sum = fnv64(hdr, sizeof hdr);
  sum = fnv64(pic.cls.data(), pic.cls.size(), sum);
  sum = fnv64(pic.certified.data(), pic.certified.size(), sum);
  out.write(reinterpret_cast<const char*>(&sum), sizeof sum);
  out.close();
  if (out) std::rename((path + ".tmp").c_str(), path.c_str());
}

}  // namespace detail

// Parse, finalize, and validate a scene file; the coarse picture comes from
// the cache directory (PARABOLICA_CACHE_DIR) when a matching entry exists.
inline Scene load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(e.what());
  }
  try {
    if (j.value("schema", 0) != 1) throw SchemaError("unsupported version");
    Scene s(RationalMap(detail::parse_poly(j.at("map").at("num"), "map.num"),
                        detail::parse_poly(j.at("map").at("den"), "map.den")));
    s.name = j.at("name").get<std::string>();

    const auto& kc = j.at("constants");
    auto q = [&](const char* key) { return detail::parse_q(kc.at(key), key); };
    s.k.c0 = q("c0");
    s.k.n_mult = q("n_mult");
    s.k.d_lo = q("d_lo");
    s.k.sep_d = q("sep_d");
    s.k.alpha = q("alpha");
    s.k.B = q("B");
    s.k.u_radius = q("u_radius");
    s.k.escape_radius = q("escape_radius");
    s.k.budget_factor = kc.contains("budget_factor") ? q("budget_factor")
                                                     : mpq_class(1);
    s.k.beta = kc.at("beta").get<long>();
    s.k.c_pix = kc.value("c_pix", 8);
    s.k.grid_radius = kc.value("grid_radius", 4);
    s.k.coarse_budget = kc.value("coarse_budget", 1L << 14);
    s.k.u_depth = kc.value("u_depth", 0);

    for (const auto& pj : j.at("parabolic")) {
      ParabolicPointSpec p;
      p.location = detail::parse_point(pj.at("location"), "parabolic");
      p.u_exp = pj.at("u_exp").get<int>();
      p.repelling_axes = detail::parse_axes(pj.at("repelling_axes"),
                                            "repelling_axes");
      p.attracting_axes = detail::parse_axes(pj.at("attracting_axes"),
                                             "attracting_axes");
      p.e1_radius = detail::parse_q(pj.at("e1_radius"), "e1_radius");
      p.e2_radius = detail::parse_q(pj.at("e2_radius"), "e2_radius");
      if (pj.contains("u_trap")) {
        p.u_trap_fraction = detail::parse_q(pj.at("u_trap").at("fraction"),
                                            "u_trap.fraction");
        p.u_trap_length = detail::parse_q(pj.at("u_trap").at("length"),
                                          "u_trap.length");
      }
      if (pj.contains("oracle_trap")) {
        p.oracle_trap_fraction = detail::parse_q(
            pj.at("oracle_trap").at("fraction"), "oracle_trap.fraction");
        p.oracle_trap_length = detail::parse_q(
            pj.at("oracle_trap").at("length"), "oracle_trap.length");
      }
      auto parse_disks = [&](const char* key) {
        std::vector<TrapDisk> out;
        for (const auto& dj : pj.value(key, nlohmann::json::array())) {
          TrapDisk d;
          d.center = detail::parse_point(dj.at("center"), key);
          d.radius2 = detail::parse_q(dj.at("radius2"), key);
          if (!(d.radius2 > 0)) throw SchemaError("trap disk radius");
          out.push_back(std::move(d));
        }
        return out;
      };
      p.u_trap_disks = parse_disks("u_trap_disks");
      p.oracle_trap_disks = parse_disks("oracle_trap_disks");
      s.parabolic.push_back(std::move(p));
    }
    for (const auto& qj : j.value("preparabolic", nlohmann::json::array())) {
      PreparabolicPointSpec pp;
      pp.location = detail::parse_point(qj.at("location"), "preparabolic");
      pp.order = qj.at("order").get<int>();
      pp.parent = qj.at("parent").get<int>();
      pp.e1_radius = detail::parse_q(qj.at("e1_radius"), "e1_radius");
      pp.e2_radius = detail::parse_q(qj.at("e2_radius"), "e2_radius");
      pp.axes = detail::parse_axes(qj.at("axes"), "axes");
      s.preparabolic.push_back(std::move(pp));
    }
    for (const auto& ej : j.value("excluded", nlohmann::json::array())) {
      ExcludedDisk d;
      d.center = detail::parse_point(ej.at("center"), "excluded disk");
      d.radius = detail::parse_q(ej.at("radius"), "excluded disk radius");
      if (!(d.radius > 0)) throw SchemaError("excluded disk radius");
      s.excluded.push_back(std::move(d));
    }
    for (const auto& cj : j.value("critical_points",
                                  nlohmann::json::array())) {
      CriticalPoint cp;
      cp.location = detail::parse_point(cj.at("location"), "critical point");
      cp.radius = detail::parse_q(cj.at("radius"), "critical point radius");
      s.critical_points.push_back(std::move(cp));
    }
    if (s.parabolic.empty()) throw SchemaError("no parabolic points");

    finalize_scene(s);

    // the coarse picture depends on the full config: key the cache by a
    // content hash of the file
    s.content_hash = detail::fnv64(text.data(), text.size());
    char key[64];
    std::snprintf(key, sizeof key, "%016llx",
                  (unsigned long long)s.content_hash);
    std::string cache_path;
    if (const char* dir = std::getenv("PARABOLICA_CACHE_DIR"))
      if (*dir) cache_path = std::string(dir) + "/" + s.name + "-" + key +
                             ".pic";
    bool cached = !cache_path.empty() &&
                  detail::read_picture_cache(cache_path, s.picture);
    if (!cached) {
      s.picture = build_coarse_picture(s.map, s.oracle_trap_set(), s.k);
      if (!cache_path.empty())
        detail::write_picture_cache(cache_path, s.picture);
    }

    validate_scene(s);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(e.what());
  }
}

// ---------------------------------------------------------------------------
// Rasters

struct Viewport {
  mpq_class center_x, center_y;  // dyadic
  int n = 8;                     // pixel pitch 2^{-n}
  long width = 256, height = 256;
};

// raster codes: the two decision values plus a sidecar-only failure mark
enum : uint8_t { kPixOne = 0, kPixZero = 1, kPixFailed = 2 };

struct RenderedImage {
  int n = 8;
  long i0 = 0, j0 = 0;  // lattice indices of the top-left pixel center
  long width = 0, height = 0;
  std::vector<uint8_t> pix;  // raster code per pixel, row-major from top-left
  uint64_t scene_hash = 0;
  double seconds = 0;
  long failed = 0;

  long idx(long i, long j) const { return j * width + i; }
};

// lattice window of a viewport: pixel centers ((i0+i)/2^n, (j0-j)/2^n)
inline std::pair<long, long> lattice_origin(const Viewport& vp) {
  mpq_class sx = vp.center_x * (1L << vp.n);
  mpq_class sy = vp.center_y * (1L << vp.n);
  // dyadic centers are required to land on the lattice
  if (sx.get_den() != 1 || sy.get_den() != 1)
    throw SchemaError("viewport center must be dyadic at the pixel pitch");
  long cx = long(sx.get_num().get_si());
  long cy = long(sy.get_num().get_si());
  return {cx - vp.width / 2, cy + vp.height / 2};
}

inline void write_pgm(const RenderedImage& img, const std::string& path,
                      bool mask) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot write " + path);
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> row(img.width);
  for (long j = 0; j < img.height; ++j) {
    for (long i = 0; i < img.width; ++i) {
      uint8_t v = img.pix[img.idx(i, j)];
      if (mask)
        row[i] = v == kPixFailed ? 0xFF : 0x00;
      else
        row[i] = v == kPixOne ? 0x00 : 0xFF;
    }
    out.write(reinterpret_cast<const char*>(row.data()), img.width);
  }
  if (!out) throw IoFailure("short write on " + path);
}

inline void write_png(const RenderedImage& img, const std::string& path) {
  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw IoFailure("cannot write " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    std::fclose(fp);
    throw IoFailure("png encoder failed for " + path);
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, png_uint_32(img.width), png_uint_32(img.height), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<unsigned char> row(img.width);
  for (long j = 0; j < img.height; ++j) {
    for (long i = 0; i < img.width; ++i)
      row[i] = img.pix[img.idx(i, j)] == kPixOne ? 0x00
                                                                  : 0xFF;
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

// the sidecar mask marks failed pixels; the main raster shows them as Zero
inline void write_image(const RenderedImage& img, const std::string& format,
                        const std::string& path) {
  if (format == "pgm") {
    write_pgm(img, path, false);
    write_pgm(img, path + ".mask.pgm", true);
  } else if (format == "png") {
    write_png(img, path);
    write_pgm(img, path + ".mask.pgm", true);
  } else {
    throw IoFailure("unknown image format " + format);
  }
}

// ---------------------------------------------------------------------------
// Grid rendering

// Cell-distance prefilter.  The drawn set of the coarse picture contains the
// whole set (the grid covers B(0, B)), so a certified cell-distance floor
// above 2^{2-n} settles Zero without running the decision procedure.
inline bool prefilter_zero(const Scene& s, const mpq_class& x,
                           const mpq_class& y, int n) {
  const auto& pic = s.picture;
  if (pic.W == 0 || pic.dt2.empty()) return false;
  auto cell_of = [&](const mpq_class& v) {
    mpq_class t = v * (1L << pic.c_pix);
    mpz_class q;
    mpz_fdiv_q(q.get_mpz_t(), t.get_num().get_mpz_t(),
               t.get_den().get_mpz_t());
    if (!q.fits_slong_p()) return long(-1) - pic.W;  // far out of grid
    return q.get_si() + pic.W / 2;
  };
  long ci = cell_of(x), cj = cell_of(y);
  if (!pic.in_grid(ci, cj)) return false;
  int64_t q2 = pic.dt2[pic.idx(ci, cj)];
  if (q2 >= (int64_t(1) << 62)) return true;  // no drawn cell anywhere
  int64_t sq = int64_t(std::sqrt(double(q2)));
  while (sq * sq > q2) --sq;
  while ((sq + 1) * (sq + 1) <= q2) ++sq;
  // center offset within its cell costs one more cell of slack
  mpq_class dlo = (mpq_class(sq) - mpq_class(3, 2));
  dlo /= (1L << pic.c_pix);
  mpq_class cut(4);
  cut /= mpz_class(1) << n;
  return dlo >= cut;
}

// Render the pixel function over the dyadic lattice of the viewport.  Pixels
// are independent; rows are handed to a worker pool and written into
// preassigned slots, so the raster is byte-identical for any worker count.
// Failed pixels keep a sentinel code (exported only through the sidecar
// mask) and are never reported as One or Zero.
inline RenderedImage render_grid(const Scene& scene, const Viewport& vp,
                                 int workers = 1,
                                 std::vector<std::string>* trace = nullptr) {
  auto [i0, j0] = lattice_origin(vp);
  RenderedImage img;
  img.n = vp.n;
  img.i0 = i0;
  img.j0 = j0;
  img.width = vp.width;
  img.height = vp.height;
  img.scene_hash = scene.content_hash;
  img.pix.assign(size_t(vp.width) * vp.height, kPixZero);
  auto t0 = std::chrono::steady_clock::now();
  std::atomic<long> next_row{0}, failed{0};
  std::mutex mu;
  std::exception_ptr first_error;
  auto work = [&](bool tracing) {
    for (;;) {
      long j = next_row.fetch_add(1);
      if (j >= vp.height) return;
      for (long i = 0; i < vp.width; ++i) {
        mpq_class x(i0 + i), y(j0 - j);
        x /= mpz_class(1) << vp.n;
        y /= mpz_class(1) << vp.n;
        if (prefilter_zero(scene, x, y, vp.n)) continue;
        try {
          Ball z = Ball::exact(x, y, 64);
          PixelDecision d = decide_point(z, vp.n, scene,
                                         tracing ? trace : nullptr);
          img.pix[img.idx(i, j)] =
              d.value == PixelValue::One ? kPixOne : kPixZero;
        } catch (const MembershipUnresolvable&) {
          img.pix[img.idx(i, j)] = kPixFailed;
          failed.fetch_add(1);
        } catch (const PrecisionExhausted&) {
          img.pix[img.idx(i, j)] = kPixFailed;
          failed.fetch_add(1);
        } catch (...) {
          std::lock_guard<std::mutex> lk(mu);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    }
  };
  if (workers <= 1) {
    work(trace != nullptr);
  } else {
    // tracing interleaves across threads, so it stays single-threaded
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t)
      pool.emplace_back(work, false);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  img.failed = failed.load();
  img.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return img;
}

// ---------------------------------------------------------------------------
// Scaling benchmark: the decision procedure against plain iteration on the
// family p + 2^-n along the first repelling axis, where plain escape costs
// blow up exponentially in n

struct BenchRow {
  long n = 0;
  double decide_seconds = 0;
  long long naive_steps = 0;
  bool naive_measured = false;  // false rows extrapolate the doubling law
  long iterations = 0;          // decision loop iterations
};

inline std::vector<BenchRow> bench_scaling(const Scene& scene, long n_lo,
                                           long n_hi,
                                           long naive_cap_n = 22) {
  const auto& p = scene.parabolic.at(0);
  mpq_class ax(p.repelling_axes.at(0).first);
  mpq_class ay(p.repelling_axes.at(0).second);
  TrapSet traps = scene.oracle_trap_set();
  std::vector<BenchRow> out;
  long long last_measured = 0;
  long last_n = 0;
  for (long n = n_lo; n <= n_hi; ++n) {
    BenchRow row;
    row.n = n;
    mpq_class step(1);
    step /= mpz_class(1) << n;
    mpq_class x = p.location.x + ax * step;
    mpq_class y = p.location.y + ay * step;
    Ball z = Ball::exact(x, y, std::max<long>(64, n + 32));
    auto t0 = std::chrono::steady_clock::now();
    PixelDecision d = decide_point(z, n, scene);
    row.decide_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    row.iterations = d.cert.iterations;
    if (n <= naive_cap_n) {
      NaiveVerdict v = naive_classify(scene.map, traps, scene.k.escape_radius,
                                      z, 1L << (n + 6));
      if (v.fate == OrbitFate::Escaped) {
        row.naive_steps = v.steps;
        row.naive_measured = true;
        last_measured = v.steps;
        last_n = n;
      }
    }
    if (!row.naive_measured && last_measured)
      row.naive_steps = last_measured << (n - last_n);
    out.push_back(row);
  }
  return out;
}

inline void write_bench_csv(const std::vector<BenchRow>& rows,
                            std::ostream& out) {
  out << "n,decide_seconds,loop_iterations,naive_steps,naive_measured\n";
  for (const auto& r : rows)
    out << r.n << "," << r.decide_seconds << "," << r.iterations << ","
        << r.naive_steps << "," << (r.naive_measured ? 1 : 0) << "\n";
}

// read back a P5 raster: black pixels become One
inline RenderedImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path);
  std::string magic;
  long w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P5" || w <= 0 || h <= 0 || maxval != 255)
    throw IoFailure("unsupported raster in " + path);
  in.get();  // single whitespace after the header
  RenderedImage img;
  img.width = w;
  img.height = h;
  img.pix.assign(size_t(w) * h, kPixZero);
  std::vector<unsigned char> row(w);
  for (long j = 0; j < h; ++j) {
    in.read(reinterpret_cast<char*>(row.data()), w);
    if (!in) throw IoFailure("short read on " + path);
    for (long i = 0; i < w; ++i)
      if (row[i] < 128) img.pix[img.idx(i, j)] = kPixOne;
  }
  return img;
}

// ---------------------------------------------------------------------------
// Band comparison (two-sided containment under dilation)

struct BandReport {
  bool a_in_b = false;  // drawn(a) inside drawn(b) dilated by the radius
  bool b_in_a = false;
  double hausdorff = 0;  // empirical two-sided distance, world units
  double radius = 0;     // dilation radius used, world units
};

inline BandReport compare_pictures(const RenderedImage& a,
                                   const RenderedImage& b, int n) {
  if (a.width != b.width || a.height != b.height ||
      (a.n && b.n && a.n != b.n && a.n != 0) || a.i0 != b.i0 || a.j0 != b.j0)
    throw ViewportMismatch();
  const long W = a.width, H = a.height;
  auto drawn = [](const RenderedImage& im, long t) {
    return im.pix[t] == kPixOne;
  };
  std::vector<int64_t> da, db;
  CoarsePicture::squared_edt(W, H, [&](long t) { return drawn(a, t); }, da);
  CoarsePicture::squared_edt(W, H, [&](long t) { return drawn(b, t); }, db);
  const int64_t INF = int64_t(1) << 62;
  // dilation radius 2^{-(n-2)} is four pixels at pitch 2^{-n}
  int64_t r2 = 16;
  BandReport rep;
  rep.radius = 4.0 / double(1L << n);
  rep.a_in_b = rep.b_in_a = true;
  int64_t worst_ab = 0, worst_ba = 0;
  bool a_any = false, b_any = false;
  for (long t = 0; t < W * H; ++t) {
    if (drawn(a, t)) {
      a_any = true;
      if (db[t] > r2) rep.a_in_b = false;
      if (db[t] < INF) worst_ab = std::max(worst_ab, db[t]);
    }
    if (drawn(b, t)) {
      b_any = true;
      if (da[t] > r2) rep.b_in_a = false;
      if (da[t] < INF) worst_ba = std::max(worst_ba, da[t]);
    }
  }
  if (a_any != b_any) rep.a_in_b = rep.b_in_a = (a_any == b_any);
  rep.hausdorff = std::sqrt(double(std::max(worst_ab, worst_ba))) /
                  double(1L << n);
  return rep;
}

// view a coarse picture's drawn set as an image on its own grid
inline RenderedImage picture_as_image(const CoarsePicture& pic) {
  RenderedImage img;
  img.n = pic.c_pix;
  img.width = img.height = pic.W;
  img.i0 = -pic.W / 2;
  img.j0 = pic.W / 2;
  img.pix.assign(size_t(pic.W) * pic.W, kPixZero);
  for (long j = 0; j < pic.W; ++j)
    for (long i = 0; i < pic.W; ++i)
      if (pic.cls[pic.idx(i, j)] == CoarsePicture::kDrawn)
        // picture rows run upward, image rows downward
        img.pix[img.idx(i, pic.W - 1 - j)] = kPixOne;
  return img;
}

}  // namespace parabolica
