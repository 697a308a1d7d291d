#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "naon/data.hpp"
#include "naon/decoder.hpp"
#include "naon/error.hpp"
#include "naon/inference.hpp"
#include "naon/metrics.hpp"
#include "naon/objective.hpp"
#include "naon/trainer.hpp"

namespace py = pybind11;
using namespace naon;

namespace {

using Matrix = std::vector<std::vector<double>>;
using Order = std::vector<std::size_t>;

Tensor to_tensor(const Matrix& m) {
  const std::size_t r = m.size(), c = r ? m[0].size() : 0;
  Tensor t({r, c});
  for (std::size_t i = 0; i < r; ++i) {
    if (m[i].size() != c) throw DimensionError("ragged matrix");
    for (std::size_t j = 0; j < c; ++j) t.at(i, j) = m[i][j];
  }
  return t;
}

Matrix to_matrix(const Tensor& t) {
  Matrix m(t.rows(), std::vector<double>(t.cols()));
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j) m[i][j] = t.at(i, j);
  return m;
}

std::vector<Sentence> to_sentences(const std::vector<std::vector<TokenId>>& xs) {
  std::vector<Sentence> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(Sentence{x});
  return out;
}

py::dict paragraph_dict(const Paragraph& p) {
  std::vector<std::vector<TokenId>> sentences;
  for (const auto& s : p.sentences) sentences.push_back(s.tokens);
  py::dict d;
  d["sentences"] = sentences;
  d["gold_order"] = p.gold_order;
  return d;
}

py::list corpus_list(const Corpus& c) {
  py::list out;
  for (const auto& p : c.paragraphs) out.append(paragraph_dict(p));
  return out;
}

py::dict report_dict(const MetricReport& r) {
  py::dict d;
  d["acc"] = r.acc;
  d["pmr"] = r.pmr;
  d["tau"] = r.tau;
  d["head_acc"] = r.head_acc;
  d["tail_acc"] = r.tail_acc;
  d["prr"] = r.prr;
  d["msrr"] = r.msrr;
  d["paragraph_count"] = r.paragraph_count;
  return d;
}

// Python values are passed through str(), so ints, floats and strings work.
template <typename Config>
void apply_dict(Config& cfg, const py::dict& values) {
  for (const auto& [k, v] : values) {
    const auto key = py::str(k).cast<std::string>();
    std::string value = py::str(v).cast<std::string>();
    if (py::isinstance<py::tuple>(v) || py::isinstance<py::list>(v)) {
      const auto seq = py::cast<std::vector<long long>>(v);
      value.clear();
      for (std::size_t i = 0; i < seq.size(); ++i) value += (i ? "," : "") + std::to_string(seq[i]);
    }
    if (!cfg.apply(key, value)) throw ConfigError("unknown key '" + key + "'");
  }
}

Corpus synth(const py::dict& values) {
  SynthConfig cfg;
  apply_dict(cfg, values);
  return synth_generate(cfg);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Non-autoregressive sentence ordering core";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);
  py::register_exception<ScaleError>(m, "ScaleError", PyExc_ValueError);
  py::register_exception<LoadError>(m, "LoadError", PyExc_IOError);
  py::register_exception<IoError>(m, "IoError", PyExc_IOError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def("accuracy", [](const Order& p, const Order& g) { return accuracy(p, g); });
  m.def("kendall_tau", [](const Order& p, const Order& g) { return kendall_tau(p, g); });
  m.def("repetition_ratios",
        [](const std::vector<Order>& preds) { return repetition_ratios(preds); },
        "(PRR, mSRR) in percent for raw predictions");
  m.def(
      "metrics",
      [](const std::vector<Order>& predicted, const std::vector<Order>& gold) {
        if (predicted.size() != gold.size()) throw InputError("prediction and gold counts differ");
        std::vector<OrderPair> batch;
        for (std::size_t i = 0; i < gold.size(); ++i) batch.push_back({predicted[i], gold[i]});
        return report_dict(compute_report(batch));
      },
      py::arg("predicted"), py::arg("gold"));

  m.def("greedy_assign", [](const Matrix& p) { return greedy_assign(to_tensor(p)).assignment; });
  m.def("raw_argmax", [](const Matrix& p) { return raw_argmax(to_tensor(p)).assignment; });
  m.def("hungarian_assign", [](const Matrix& p) { return hungarian_assign(to_tensor(p)).assignment; });
  m.def("brute_force_assign", [](const Matrix& p) { return brute_force_assign(to_tensor(p)).assignment; });
  m.def("log_objective", [](const Matrix& p, const Order& a) { return log_objective(to_tensor(p), a); });

  m.def("positional_encoding", [](std::size_t n, std::size_t d) { return to_matrix(positional_encoding(n, d)); });
  m.def("pointer_loss", [](const Matrix& omega, const Order& gold) {
    return pointer_loss(PointerMatrix::from_scores(to_tensor(omega)), gold).value;
  });
  m.def("exclusive_loss", [](const Matrix& omega, const Order& gold) {
    return exclusive_loss(PointerMatrix::from_scores(to_tensor(omega)), gold).value;
  });

  m.def("synth", [](const py::dict& cfg) { return corpus_list(synth(cfg)); },
        "Generate a synthetic corpus as a list of {'sentences', 'gold_order'} dicts");
  m.def(
      "write_synth",
      [](const py::dict& cfg, const std::filesystem::path& path) { write_jsonl(path, synth(cfg)); },
      py::arg("config"), py::arg("path"));
  m.def("load_jsonl", [](const std::filesystem::path& path) { return corpus_list(load_jsonl(path)); });
  m.def("shuffle_paragraph", [](const std::vector<std::vector<TokenId>>& sentences, const Order& gold,
                                std::uint64_t seed) {
    return paragraph_dict(shuffle_paragraph(Paragraph{to_sentences(sentences), gold}, seed));
  });

  py::class_<Model>(m, "Model")
      .def(py::init([](const py::dict& cfg, std::uint64_t seed) {
             ModelConfig mc;
             apply_dict(mc, cfg);
             return Model(mc, seed);
           }),
           py::arg("config") = py::dict(), py::arg("seed") = 0)
      .def_static("load", &Model::load)
      .def("save", &Model::save)
      .def_property_readonly("config_text", [](const Model& model) { return model.config().to_text(); })
      .def("forward",
           [](Model& model, const std::vector<std::vector<TokenId>>& sentences) {
             const PointerMatrix pm = forward(to_sentences(sentences), model.params(), model.config());
             py::dict d;
             d["omega"] = to_matrix(pm.omega);
             d["row_probs"] = to_matrix(pm.row_probs);
             d["col_probs"] = to_matrix(pm.col_probs);
             return d;
           })
      .def(
          "order",
          [](Model& model, const std::vector<std::vector<TokenId>>& sentences, const std::string& method) {
            const PointerMatrix pm = forward(to_sentences(sentences), model.params(), model.config());
            return decode(pm, parse_decode_method(method)).assignment;
          },
          py::arg("sentences"), py::arg("decode") = "greedy")
      .def(
          "evaluate",
          [](Model& model, const std::filesystem::path& corpus, const std::string& method) {
            return report_dict(evaluate(model, load_jsonl(corpus), parse_decode_method(method)));
          },
          py::arg("corpus"), py::arg("decode") = "greedy");

  m.def(
      "train",
      [](const py::dict& cfg, const std::filesystem::path& train_path, const std::filesystem::path& valid_path,
         std::optional<std::filesystem::path> out_dir) {
        TrainConfig tc;
        apply_dict(tc, cfg);
        const Corpus tr = load_jsonl(train_path, nullptr, Split::train);
        const Corpus va = load_jsonl(valid_path, nullptr, Split::valid);
        TrainOutputs outputs;
        outputs.directory = out_dir;
        TrainResult result = [&] {
          py::gil_scoped_release release;
          return train(tc, tr, va, outputs);
        }();
        py::list history;
        for (const auto& e : result.history.epochs) {
          py::dict d;
          d["epoch"] = e.epoch;
          d["train_loss"] = e.train_loss;
          d["train_lc"] = e.train_lc;
          d["train_lex"] = e.train_lex;
          d["valid"] = report_dict(e.valid);
          d["improved"] = e.improved;
          history.append(d);
        }
        return py::make_tuple(std::move(result.best), history);
      },
      py::arg("config"), py::arg("train"), py::arg("valid"), py::arg("out_dir") = py::none(),
      "Train and return (best Model, per-epoch history)");
  m.def(
      "evaluate",
      [](const std::filesystem::path& checkpoint, const std::filesystem::path& corpus, const std::string& method) {
        return report_dict(evaluate(checkpoint, load_jsonl(corpus), parse_decode_method(method)));
      },
      py::arg("checkpoint"), py::arg("corpus"), py::arg("decode") = "greedy");
}
