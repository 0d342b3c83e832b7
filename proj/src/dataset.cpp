#include "scanet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numeric>
#include <stdexcept>

namespace fs = std::filesystem;

namespace scanet {

namespace {

bool has_image_ext(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) {
        return static_cast<char>(std::tolower(c));
    });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".pgm" || ext == ".ppm";
}

std::map<std::string, fs::path> scan_dir(const fs::path& dir) {
    std::map<std::string, fs::path> out;  // ordered by stem
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && has_image_ext(e.path())) {
            out[e.path().stem().string()] = e.path();
        }
    }
    return out;
}

ImageU8 to_rgb(const ImageU8& img) {
    if (img.channels == 3) return img;
    ImageU8 rgb;
    rgb.width = img.width;
    rgb.height = img.height;
    rgb.channels = 3;
    rgb.pixels.resize(static_cast<size_t>(img.width) * img.height * 3);
    for (size_t i = 0; i < img.pixels.size(); ++i) {
        rgb.pixels[3 * i] = rgb.pixels[3 * i + 1] = rgb.pixels[3 * i + 2] = img.pixels[i];
    }
    return rgb;
}

ImageU8 to_gray(const ImageU8& img) {
    if (img.channels == 1) return img;
    ImageU8 gray;
    gray.width = img.width;
    gray.height = img.height;
    gray.channels = 1;
    gray.pixels.resize(static_cast<size_t>(img.width) * img.height);
    for (size_t i = 0; i < gray.pixels.size(); ++i) gray.pixels[i] = img.pixels[3 * i];
    return gray;
}

}  // namespace

DatasetIndex load_dataset(const std::string& root, uint64_t seed,
                          const std::string& night_prefix) {
    const fs::path images_dir = fs::path(root) / "images";
    const fs::path masks_dir = fs::path(root) / "GTmaps";
    if (!fs::is_directory(images_dir) || !fs::is_directory(masks_dir)) {
        throw std::runtime_error("dataset root '" + root +
                                 "' must contain images/ and GTmaps/ directories");
    }
    const auto images = scan_dir(images_dir);
    const auto masks = scan_dir(masks_dir);
    if (images.empty()) throw std::runtime_error("dataset root '" + root + "' has no images");

    std::vector<DatasetPair> pairs;
    pairs.reserve(images.size());
    for (const auto& [stem, path] : images) {
        auto it = masks.find(stem);
        if (it == masks.end()) {
            throw std::runtime_error("missing ground-truth mask for image stem '" + stem + "'");
        }
        DatasetPair p;
        p.image_path = path.string();
        p.mask_path = it->second.string();
        p.stem = stem;
        p.night = !night_prefix.empty() && stem.rfind(night_prefix, 0) == 0;
        pairs.push_back(std::move(p));
    }

    // Fisher-Yates with the portable Rng stream.
    Rng rng(seed);
    for (size_t i = pairs.size() - 1; i > 0; --i) {
        const size_t j = rng.next_u32() % (i + 1);
        std::swap(pairs[i], pairs[j]);
    }

    DatasetIndex index;
    index.seed = seed;
    const size_t test_count = pairs.size() / 10;
    index.train.assign(pairs.begin(), pairs.end() - static_cast<long>(test_count));
    index.test.assign(pairs.end() - static_cast<long>(test_count), pairs.end());
    return index;
}

void apply_flips(Sample& s, bool horizontal, bool vertical) {
    if (horizontal) {
        s.image = flip_horizontal(s.image);
        s.mask = flip_horizontal(s.mask);
    }
    if (vertical) {
        s.image = flip_vertical(s.image);
        s.mask = flip_vertical(s.mask);
    }
}

Sample prepare(const DatasetPair& pair, int target_size, bool augment, Rng& rng) {
    ImageU8 img = to_rgb(load_image(pair.image_path));
    ImageU8 mask = to_gray(load_image(pair.mask_path));
    if (img.width != target_size || img.height != target_size) {
        img = resize_bilinear(img, target_size, target_size);
    }
    if (mask.width != target_size || mask.height != target_size) {
        mask = resize_nearest(mask, target_size, target_size);
    }

    Sample s;
    s.id = pair.stem;
    s.night = pair.night;
    s.image = Tensor({1, 3, target_size, target_size});
    s.mask = Tensor({1, 1, target_size, target_size});
    for (int y = 0; y < target_size; ++y) {
        for (int x = 0; x < target_size; ++x) {
            for (int c = 0; c < 3; ++c) {
                s.image.at(0, c, y, x) = static_cast<float>(img.at(y, x, c)) / 255.0f - 0.5f;
            }
            s.mask.at(0, 0, y, x) = mask.at(y, x, 0) >= 128 ? 1.0f : 0.0f;
        }
    }
    if (augment) {
        const bool h = (rng.next_u32() & 0x80000000u) != 0;
        const bool v = (rng.next_u32() & 0x80000000u) != 0;
        apply_flips(s, h, v);
    }
    return s;
}

std::vector<PatchSample> swpt_extract(const Tensor& image, const Tensor& mask) {
    const int h = image.h(), w = image.w();
    if (h % 4 != 0 || w % 4 != 0) {
        throw std::invalid_argument("swpt_extract: spatial size " + to_string(image.shape()) +
                                    " not divisible by 4");
    }
    if (mask.h() != h || mask.w() != w || mask.c() != 1) {
        throw std::invalid_argument("swpt_extract: mask " + to_string(mask.shape()) +
                                    " does not match image " + to_string(image.shape()));
    }
    const int ph = h / 4, pw = w / 4;
    std::vector<PatchSample> out;
    for (int gy = 0; gy < 4; ++gy) {
        for (int gx = 0; gx < 4; ++gx) {
            long long cloud = 0;
            for (int y = 0; y < ph; ++y)
                for (int x = 0; x < pw; ++x)
                    cloud += mask.at(0, 0, gy * ph + y, gx * pw + x) >= 0.5f ? 1 : 0;
            const double rate = static_cast<double>(cloud) / (static_cast<double>(ph) * pw);
            if (!(rate > 0.8) && !(rate < 0.2)) continue;  // ambiguous band is dropped
            PatchSample p;
            p.rate = rate;
            p.positive = rate > 0.8;
            p.patch = Tensor({1, 3, ph, pw});
            for (int c = 0; c < 3; ++c)
                for (int y = 0; y < ph; ++y)
                    for (int x = 0; x < pw; ++x)
                        p.patch.at(0, c, y, x) = image.at(0, c, gy * ph + y, gx * pw + x);
            out.push_back(std::move(p));
        }
    }
    return out;
}

namespace {

// Multi-octave value noise on [0,1)^2, bilinear between lattice points.
std::vector<double> value_noise(int size, Rng& rng) {
    std::vector<double> field(static_cast<size_t>(size) * size, 0.0);
    double amplitude = 1.0;
    for (int octave = 0; octave < 4; ++octave) {
        const int cells = 4 << octave;
        std::vector<double> lattice(static_cast<size_t>(cells + 1) * (cells + 1));
        for (double& v : lattice) v = rng.uniform(0.0f, 1.0f);
        const double scale = static_cast<double>(cells) / size;
        for (int y = 0; y < size; ++y) {
            const double fy = y * scale;
            const int y0 = static_cast<int>(fy);
            const double wy = fy - y0;
            for (int x = 0; x < size; ++x) {
                const double fx = x * scale;
                const int x0 = static_cast<int>(fx);
                const double wx = fx - x0;
                const double* row0 = lattice.data() + static_cast<size_t>(y0) * (cells + 1);
                const double* row1 = row0 + (cells + 1);
                const double top = row0[x0] * (1.0 - wx) + row0[x0 + 1] * wx;
                const double bot = row1[x0] * (1.0 - wx) + row1[x0 + 1] * wx;
                field[static_cast<size_t>(y) * size + x] += amplitude * (top * (1.0 - wy) + bot * wy);
            }
        }
        amplitude *= 0.5;
    }
    return field;
}

}  // namespace

std::vector<Sample> synth_generate(int count, int size, uint64_t seed) {
    if (count < 1) throw std::invalid_argument("synth_generate: count must be > 0");
    if (size < 16 || size % 16 != 0) {
        throw std::invalid_argument("synth_generate: size must be a positive multiple of 16");
    }
    std::vector<Sample> out;
    out.reserve(static_cast<size_t>(count));
    const long long total = static_cast<long long>(size) * size;
    for (int idx = 0; idx < count; ++idx) {
        Rng rng(seed * 0x100000001b3ull + static_cast<uint64_t>(idx));
        const std::vector<double> field = value_noise(size, rng);
        const double cover = rng.uniform(0.25f, 0.75f);

        // Rank threshold: exactly round(cover * total) cloud pixels.
        const long long cloud_count =
            std::clamp<long long>(std::llround(cover * static_cast<double>(total)), 1, total - 1);
        std::vector<int> order(static_cast<size_t>(total));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return field[static_cast<size_t>(a)] > field[static_cast<size_t>(b)]; });
        const double tau = field[static_cast<size_t>(order[static_cast<size_t>(cloud_count - 1)])];

        std::vector<uint8_t> cloud(static_cast<size_t>(total), 0);
        for (long long i = 0; i < cloud_count; ++i) cloud[static_cast<size_t>(order[static_cast<size_t>(i)])] = 1;

        // Sky gradient and cloud brightness keyed to the same field so the
        // mask is recoverable from the image.
        const double sky_top = 0.35 + 0.25 * rng.uniform(0.0f, 1.0f);
        const double soft = 0.05;  // blend half-width around the mask threshold
        Sample s;
        s.id = "synth_" + std::to_string(idx);
        s.image = Tensor({1, 3, size, size});
        s.mask = Tensor({1, 1, size, size});
        for (int y = 0; y < size; ++y) {
            const double t = static_cast<double>(y) / size;
            const double sky_r = 0.18 + 0.10 * t;
            const double sky_g = sky_top * 0.8 + 0.18 * t;
            const double sky_b = sky_top + 0.30 * t;
            for (int x = 0; x < size; ++x) {
                const size_t i = static_cast<size_t>(y) * size + x;
                double a = 0.5 + (field[i] - tau) / (2.0 * soft);
                a = std::clamp(a, 0.0, 1.0);
                const double bright = 0.78 + 0.20 * std::clamp(field[i] - tau, 0.0, 0.5);
                const double r = sky_r * (1.0 - a) + bright * a;
                const double g = sky_g * (1.0 - a) + bright * a;
                const double b = std::min(1.0, sky_b) * (1.0 - a) + bright * 0.97 * a;
                const auto q = [](double v) {
                    return static_cast<float>(std::clamp(std::lround(v * 255.0), 0l, 255l)) / 255.0f - 0.5f;
                };
                s.image.at(0, 0, y, x) = q(r);
                s.image.at(0, 1, y, x) = q(g);
                s.image.at(0, 2, y, x) = q(b);
                s.mask.at(0, 0, y, x) = cloud[i] ? 1.0f : 0.0f;
            }
        }
        out.push_back(std::move(s));
    }
    return out;
}

void export_dataset(const std::vector<Sample>& samples, const std::string& root) {
    fs::create_directories(fs::path(root) / "images");
    fs::create_directories(fs::path(root) / "GTmaps");
    for (const Sample& s : samples) {
        save_ppm((fs::path(root) / "images" / (s.id + ".ppm")).string(), image_to_u8(s.image));
        save_pgm((fs::path(root) / "GTmaps" / (s.id + ".pgm")).string(), mask_to_u8(s.mask));
    }
}

ImageU8 image_to_u8(const Tensor& image) {
    ImageU8 img;
    img.width = image.w();
    img.height = image.h();
    img.channels = 3;
    img.pixels.resize(static_cast<size_t>(img.width) * img.height * 3);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) {
                const float v = (image.at(0, c, y, x) + 0.5f) * 255.0f;
                img.at(y, x, c) = static_cast<uint8_t>(std::clamp(std::lround(v), 0l, 255l));
            }
    return img;
}

ImageU8 mask_to_u8(const Tensor& mask, float threshold) {
    ImageU8 img;
    img.width = mask.w();
    img.height = mask.h();
    img.channels = 1;
    img.pixels.resize(static_cast<size_t>(img.width) * img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            img.at(y, x, 0) = mask.at(0, 0, y, x) >= threshold ? 255 : 0;
    return img;
}

Tensor resize_map_bilinear(const Tensor& map, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) throw std::invalid_argument("resize_map_bilinear: bad target");
    Tensor out({map.n(), map.c(), out_h, out_w});
    const double sy = static_cast<double>(map.h()) / out_h;
    const double sx = static_cast<double>(map.w()) / out_w;
    for (int bn = 0; bn < map.n(); ++bn)
        for (int ic = 0; ic < map.c(); ++ic)
            for (int y = 0; y < out_h; ++y) {
                double fy = (y + 0.5) * sy - 0.5;
                fy = std::clamp(fy, 0.0, static_cast<double>(map.h() - 1));
                const int y0 = static_cast<int>(fy);
                const int y1 = std::min(y0 + 1, map.h() - 1);
                const double wy = fy - y0;
                for (int x = 0; x < out_w; ++x) {
                    double fx = (x + 0.5) * sx - 0.5;
                    fx = std::clamp(fx, 0.0, static_cast<double>(map.w() - 1));
                    const int x0 = static_cast<int>(fx);
                    const int x1 = std::min(x0 + 1, map.w() - 1);
                    const double wx = fx - x0;
                    const double top = map.at(bn, ic, y0, x0) * (1.0 - wx) +
                                       map.at(bn, ic, y0, x1) * wx;
                    const double bot = map.at(bn, ic, y1, x0) * (1.0 - wx) +
                                       map.at(bn, ic, y1, x1) * wx;
                    out.at(bn, ic, y, x) = static_cast<float>(top * (1.0 - wy) + bot * wy);
                }
            }
    return out;
}

ImageU8 prob_map_to_u8(const Tensor& map) {
    ImageU8 img;
    img.width = map.w();
    img.height = map.h();
    img.channels = 1;
    img.pixels.resize(static_cast<size_t>(img.width) * img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const float v = map.at(0, 0, y, x) * 255.0f;
            img.at(y, x, 0) = static_cast<uint8_t>(std::clamp(std::lround(v), 0l, 255l));
        }
    return img;
}

}  // namespace scanet
