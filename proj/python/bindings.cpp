// Python bindings for the main operations: tensor ops, losses, metrics, the
// model itself, the synthetic data generator and the fp16 emulation.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "scanet/bench.hpp"
#include "scanet/dataset.hpp"
#include "scanet/flops.hpp"
#include "scanet/gradcheck.hpp"
#include "scanet/half.hpp"
#include "scanet/train.hpp"

namespace py = pybind11;
using namespace scanet;

namespace {

using Array = py::array_t<float, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
    if (a.ndim() != 4) throw std::invalid_argument("expected a 4-d (n, c, h, w) float array");
    Shape4 s{static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)),
             static_cast<int>(a.shape(2)), static_cast<int>(a.shape(3))};
    std::vector<float> data(a.data(), a.data() + a.size());
    return Tensor::from_data(s, std::move(data));
}

py::array from_tensor(const Tensor& t) {
    py::array_t<float> out({t.n(), t.c(), t.h(), t.w()});
    std::copy(t.data(), t.data() + t.size(), out.mutable_data());
    return out;
}

Tensor optional_bias(const py::object& bias) {
    if (bias.is_none()) return Tensor{};
    return to_tensor(bias.cast<Array>());
}

py::dict metrics_dict(const Metrics& m) {
    py::dict d;
    d["accuracy"] = m.accuracy;
    d["precision"] = m.precision;
    d["recall"] = m.recall;
    d["f_score"] = m.f_score;
    d["error_rate"] = m.error_rate;
    d["miou"] = m.miou;
    d["degenerate"] = m.degenerate;
    return d;
}

class PyModel {
public:
    PyModel(const std::string& variant, int size, uint32_t seed)
        : model_(ScanetConfig::by_name(variant, size), seed) {}

    explicit PyModel(const std::string& ckpt_path) : model_(config_of(ckpt_path), 0) {
        load_into(load_checkpoint(ckpt_path), model_.params());
    }

    py::dict forward(const Array& image) {
        Ctx ctx;
        const StageOutputs out = model_.forward(ctx, to_tensor(image), false);
        py::dict d;
        for (int i = 0; i < 4; ++i) {
            d[("s" + std::to_string(i + 1)).c_str()] = from_tensor(out.s[i]);
            d[("o" + std::to_string(i + 1)).c_str()] = from_tensor(out.o[i]);
        }
        for (int i = 0; i < 3; ++i) {
            d[("m" + std::to_string(i + 2)).c_str()] = from_tensor(out.m[i]);
        }
        return d;
    }

    py::array infer_mask(const Array& image, double threshold) {
        Ctx ctx;
        const Tensor s4 = model_.forward(ctx, to_tensor(image), false).s[3];
        py::array_t<uint8_t> out({s4.h(), s4.w()});
        for (int y = 0; y < s4.h(); ++y)
            for (int x = 0; x < s4.w(); ++x)
                out.mutable_at(y, x) = s4.at(0, 0, y, x) >= threshold ? 255 : 0;
        return out;
    }

    void save(const std::string& path) const {
        save_checkpoint(path, make_checkpoint(model_.params(),
                                              "{\"variant\":\"" + model_.config().variant +
                                                  "\",\"size\":" +
                                                  std::to_string(model_.config().input_size) + "}",
                                              0));
    }

    long long param_count() const { return model_.param_count(); }
    std::string variant() const { return model_.config().variant; }
    int input_size() const { return model_.config().input_size; }
    unsigned long long flops() const { return count_flops(model_.config()); }

private:
    static ScanetConfig config_of(const std::string& path) {
        const Checkpoint ckpt = load_checkpoint(path);
        std::string variant = "lite";
        int size = 320;
        const std::string cfg = ckpt.config_json();
        const auto vpos = cfg.find("\"variant\":\"");
        if (vpos != std::string::npos) {
            const auto start = vpos + 11;
            variant = cfg.substr(start, cfg.find('"', start) - start);
        }
        const auto spos = cfg.find("\"size\":");
        if (spos != std::string::npos) size = std::atoi(cfg.c_str() + spos + 7);
        return ScanetConfig::by_name(variant, size);
    }

    Scanet model_;
};

}  // namespace

PYBIND11_MODULE(_scanet, m) {
    m.doc() = "SCANet sky/cloud segmentation core";

    m.def("conv2d",
          [](const Array& x, const Array& w, const py::object& bias, int stride, int padding,
             int groups) {
              Ctx ctx;
              return from_tensor(ops::conv2d(ctx, to_tensor(x), to_tensor(w),
                                             optional_bias(bias), stride, padding, groups));
          },
          py::arg("input"), py::arg("weight"), py::arg("bias") = py::none(),
          py::arg("stride") = 1, py::arg("padding") = 0, py::arg("groups") = 1);
    m.def("relu", [](const Array& x) {
        Ctx ctx;
        return from_tensor(ops::relu(ctx, to_tensor(x)));
    });
    m.def("relu6", [](const Array& x) {
        Ctx ctx;
        return from_tensor(ops::relu6(ctx, to_tensor(x)));
    });
    m.def("sigmoid", [](const Array& x) {
        Ctx ctx;
        return from_tensor(ops::sigmoid(ctx, to_tensor(x)));
    });
    m.def("bilinear_upsample", [](const Array& x, int factor) {
        Ctx ctx;
        return from_tensor(ops::bilinear_upsample(ctx, to_tensor(x), factor));
    });
    m.def("global_avg_pool", [](const Array& x) {
        Ctx ctx;
        return from_tensor(ops::global_avg_pool(ctx, to_tensor(x)));
    });
    m.def("concat_channels", [](const Array& a, const Array& b) {
        Ctx ctx;
        return from_tensor(ops::concat_channels(ctx, to_tensor(a), to_tensor(b)));
    });

    m.def("f16_roundtrip", [](const Array& x) {
        py::array_t<float> out(std::vector<py::ssize_t>(x.shape(), x.shape() + x.ndim()));
        const float* src = x.data();
        float* dst = out.mutable_data();
        for (py::ssize_t i = 0; i < x.size(); ++i) dst[i] = f16_round(src[i]);
        return out;
    });

    m.def("bce_loss", [](const Array& p, const Array& y) {
        Ctx ctx;
        return bce_loss(ctx, to_tensor(p), to_tensor(y)).item();
    });
    m.def("iou_loss", [](const Array& p, const Array& y) {
        Ctx ctx;
        return iou_loss(ctx, to_tensor(p), to_tensor(y)).item();
    });

    m.def("metrics_from_counts", [](uint64_t tp, uint64_t fp, uint64_t fn, uint64_t tn) {
        return metrics_dict(metrics_from_counts({tp, fp, fn, tn}));
    });
    m.def("confusion_from_masks", [](const Array& pred, const Array& gt, double threshold) {
        const ConfusionCounts c = confusion_from_masks(to_tensor(pred), to_tensor(gt), threshold);
        return py::make_tuple(c.tp, c.fp, c.fn, c.tn);
    });
    m.def("pr_curve",
          [](const std::vector<Array>& preds, const std::vector<Array>& gts, int n_points) {
              std::vector<Tensor> p, g;
              for (const auto& a : preds) p.push_back(to_tensor(a));
              for (const auto& a : gts) g.push_back(to_tensor(a));
              std::vector<std::tuple<double, double, double>> out;
              for (const auto& pt : pr_curve(p, g, n_points)) {
                  out.emplace_back(pt.threshold, pt.precision, pt.recall);
              }
              return out;
          },
          py::arg("preds"), py::arg("gts"), py::arg("n_points") = 256);

    m.def("synth_generate", [](int count, int size, uint64_t seed) {
        py::list out;
        for (const Sample& s : synth_generate(count, size, seed)) {
            out.append(py::make_tuple(from_tensor(s.image), from_tensor(s.mask)));
        }
        return out;
    });

    m.def("count_flops", [](const std::string& variant, int size) {
        return count_flops(ScanetConfig::by_name(variant, size));
    });
    m.attr("flop_convention") = kFlopConvention;

    py::class_<PyModel>(m, "Model")
        .def(py::init<const std::string&, int, uint32_t>(), py::arg("variant") = "lite",
             py::arg("size") = 320, py::arg("seed") = 0)
        .def_static("load", [](const std::string& path) { return PyModel(path); })
        .def("forward", &PyModel::forward)
        .def("infer_mask", &PyModel::infer_mask, py::arg("image"), py::arg("threshold") = 0.5)
        .def("save", &PyModel::save)
        .def_property_readonly("param_count", &PyModel::param_count)
        .def_property_readonly("variant", &PyModel::variant)
        .def_property_readonly("input_size", &PyModel::input_size)
        .def_property_readonly("flops", &PyModel::flops);
}
