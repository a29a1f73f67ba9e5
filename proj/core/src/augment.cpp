#include "vidrec/augment.hpp"

#include <algorithm>
#include <cmath>

#include "vidrec/errors.hpp"

namespace vidrec {

void AugmentationConfig::validate() const {
  if (!(flip_p >= 0.0 && flip_p <= 1.0)) {
    throw ValidationError("augmentation: flip probability must lie in [0, 1]");
  }
  if (!(scale_min > 0.0 && scale_min <= scale_max && scale_max <= 1.0)) {
    throw ValidationError("augmentation: scale range must satisfy 0 < min <= max <= 1");
  }
}

namespace {

void require_frame(const char* op, const Tensor& f) {
  if (!f.defined() || f.rank() != 3) {
    throw ShapeError(std::string(op) + ": expected a C×H×W frame, got " + to_string(f.shape()));
  }
}

}  // namespace

Tensor crop(const Tensor& frame, std::size_t y, std::size_t x, std::size_t h, std::size_t w) {
  require_frame("crop", frame);
  const std::size_t c = frame.dim(0), H = frame.dim(1), W = frame.dim(2);
  if (h == 0 || w == 0 || y + h > H || x + w > W) {
    throw ShapeError("crop: window " + std::to_string(h) + "x" + std::to_string(w) + " at (" +
                     std::to_string(y) + ", " + std::to_string(x) + ") exceeds frame " +
                     to_string(frame.shape()));
  }
  auto d = frame.data();
  std::vector<double> out(c * h * w);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t q = 0; q < w; ++q) out[(ch * h + r) * w + q] = d[(ch * H + y + r) * W + x + q];
  return Tensor({c, h, w}, std::move(out));
}

Tensor hflip(const Tensor& frame) {
  require_frame("hflip", frame);
  const std::size_t c = frame.dim(0), H = frame.dim(1), W = frame.dim(2);
  auto d = frame.data();
  std::vector<double> out(d.size());
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t r = 0; r < H; ++r)
      for (std::size_t q = 0; q < W; ++q) out[(ch * H + r) * W + q] = d[(ch * H + r) * W + W - 1 - q];
  return Tensor(frame.shape(), std::move(out));
}

Tensor resize_bilinear(const Tensor& frame, std::size_t out_h, std::size_t out_w) {
  require_frame("resize_bilinear", frame);
  if (out_h == 0 || out_w == 0) throw ShapeError("resize_bilinear: empty output size");
  const std::size_t c = frame.dim(0), H = frame.dim(1), W = frame.dim(2);
  if (H == out_h && W == out_w) return frame.detach();
  auto coords = [](std::size_t n_out, std::size_t n_in) {
    std::vector<std::pair<std::size_t, double>> m(n_out);
    const double ratio = static_cast<double>(n_in) / static_cast<double>(n_out);
    for (std::size_t i = 0; i < n_out; ++i) {
      double s = (static_cast<double>(i) + 0.5) * ratio - 0.5;
      s = std::clamp(s, 0.0, static_cast<double>(n_in - 1));
      const auto lo = static_cast<std::size_t>(std::floor(s));
      m[i] = {lo, s - static_cast<double>(lo)};
    }
    return m;
  };
  const auto ry = coords(out_h, H), rx = coords(out_w, W);
  auto d = frame.data();
  std::vector<double> out(c * out_h * out_w);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < out_h; ++i) {
      const auto [y0, fy] = ry[i];
      const std::size_t y1 = std::min(y0 + 1, H - 1);
      for (std::size_t j = 0; j < out_w; ++j) {
        const auto [x0, fx] = rx[j];
        const std::size_t x1 = std::min(x0 + 1, W - 1);
        const double* p = d.data() + ch * H * W;
        const double top = p[y0 * W + x0] * (1.0 - fx) + p[y0 * W + x1] * fx;
        const double bot = p[y1 * W + x0] * (1.0 - fx) + p[y1 * W + x1] * fx;
        out[(ch * out_h + i) * out_w + j] = top * (1.0 - fy) + bot * fy;
      }
    }
  return Tensor({c, out_h, out_w}, std::move(out));
}

std::vector<Tensor> augment_clip(std::span<const Tensor> frames, const AugmentationConfig& config,
                                 std::mt19937_64& rng) {
  config.validate();
  if (frames.empty()) return {};
  require_frame("augment_clip", frames.front());
  const std::size_t H = frames.front().dim(1), W = frames.front().dim(2);
  const double s = std::uniform_real_distribution<double>(config.scale_min, config.scale_max)(rng);
  const std::size_t ch = std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(s * H)), 1, H);
  const std::size_t cw = std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(s * W)), 1, W);
  const std::size_t y = std::uniform_int_distribution<std::size_t>(0, H - ch)(rng);
  const std::size_t x = std::uniform_int_distribution<std::size_t>(0, W - cw)(rng);
  const bool flip = std::bernoulli_distribution(config.flip_p)(rng);

  std::vector<Tensor> out;
  out.reserve(frames.size());
  for (const Tensor& f : frames) {
    Tensor v = (ch == H && cw == W) ? f : resize_bilinear(crop(f, y, x, ch, cw), H, W);
    out.push_back(flip ? hflip(v) : v);
  }
  return out;
}

CropMode crop_mode_from_string(const std::string& text) {
  if (text == "lsta_10view") return CropMode::lsta_10view;
  if (text == "tsn_10crop") return CropMode::tsn_10crop;
  if (text == "center") return CropMode::center;
  throw ValidationError("unknown crop mode \"" + text + "\" (expected lsta_10view, tsn_10crop or center)");
}

const char* to_string(CropMode mode) {
  switch (mode) {
    case CropMode::lsta_10view: return "lsta_10view";
    case CropMode::tsn_10crop: return "tsn_10crop";
    case CropMode::center: return "center";
  }
  return "center";
}

std::vector<Tensor> eval_multiview(const Tensor& frame, const CropSpec& spec) {
  require_frame("eval_multiview", frame);
  const std::size_t H = frame.dim(1), W = frame.dim(2);
  const std::size_t s = spec.crop_size == 0 ? std::min(H, W) : spec.crop_size;
  if (s > H || s > W) {
    throw ShapeError("eval_multiview: crop size " + std::to_string(s) + " exceeds frame " +
                     to_string(frame.shape()));
  }
  const std::size_t cy = (H - s) / 2, cx = (W - s) / 2;
  if (spec.mode == CropMode::center) return {crop(frame, cy, cx, s, s)};
  std::vector<Tensor> views{crop(frame, 0, 0, s, s), crop(frame, 0, W - s, s, s),
                            crop(frame, H - s, 0, s, s), crop(frame, H - s, W - s, s, s),
                            crop(frame, cy, cx, s, s)};
  for (std::size_t k = 0; k < 5; ++k) views.push_back(hflip(views[k]));
  return views;
}

std::vector<std::vector<Tensor>> eval_multiview_clip(std::span<const Tensor> frames,
                                                     const CropSpec& spec) {
  std::vector<std::vector<Tensor>> out(spec.view_count());
  for (const Tensor& f : frames) {
    auto views = eval_multiview(f, spec);
    for (std::size_t v = 0; v < views.size(); ++v) out[v].push_back(std::move(views[v]));
  }
  return out;
}

}  // namespace vidrec
