#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "sentpool/checkpoint.hpp"
#include "sentpool/classifier.hpp"
#include "sentpool/data.hpp"
#include "sentpool/embeddings.hpp"
#include "sentpool/errors.hpp"
#include "sentpool/experiments.hpp"
#include "sentpool/heads.hpp"
#include "sentpool/numkit.hpp"
#include "sentpool/rnn_core.hpp"
#include "sentpool/trainer.hpp"

namespace py = pybind11;
using namespace sentpool;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
    if (a.ndim() == 1) {
        return Matrix(1, static_cast<std::size_t>(a.shape(0)), std::vector<double>(a.data(), a.data() + a.size()));
    }
    if (a.ndim() != 2) throw InvalidShape("expected a 1-d or 2-d array, got " + std::to_string(a.ndim()) + "-d");
    return Matrix(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
                  std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Matrix& m) {
    Array out({m.rows(), m.cols()});
    std::copy(m.storage().begin(), m.storage().end(), out.mutable_data());
    return out;
}

Array to_array(const Vector& v) {
    Array out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

Vector to_vector(const Array& a) { return Vector(a.data(), a.data() + a.size()); }

// Self-contained (ParamTensor) bundle for the optimizer binding.
struct PyParam {
    ParamTensor tensor;
};

}  // namespace

PYBIND11_MODULE(_sentpool, m) {
    m.doc() = "LSTM/BLSTM sentence classifiers with tail, pooled and hybrid heads";
    m.attr("__version__") = std::string(kVersion);
    m.attr("TOKENIZER_VERSION") = std::string(kTokenizerVersion);
    m.attr("INIT_BOUND") = kInitBound;
    m.attr("EMBEDDING_DIM") = kEmbeddingDim;

    auto error = py::register_exception<Error>(m, "SentpoolError", PyExc_RuntimeError);
    py::register_exception<InvalidShape>(m, "InvalidShape", error);
    py::register_exception<InvalidConfig>(m, "InvalidConfig", error);
    py::register_exception<EmptyInput>(m, "EmptyInput", error);
    py::register_exception<InvalidLabel>(m, "InvalidLabel", error);
    py::register_exception<ContractViolation>(m, "ContractViolation", error);
    py::register_exception<IoError>(m, "IoError", error);
    py::register_exception<DimensionError>(m, "DimensionError", error);
    py::register_exception<NumericFault>(m, "NumericFault", error);
    py::register_exception<ParseError>(m, "ParseError", error);
    py::register_exception<IntegrityError>(m, "IntegrityError", error);
    py::register_exception<DivergedError>(m, "DivergedError", error);
    py::register_exception<MissingInput>(m, "MissingInput", error);
    py::register_exception<IncompleteGrid>(m, "IncompleteGrid", error);

    // --- numerics
    py::class_<Rng>(m, "Rng")
        .def(py::init<std::uint64_t>(), py::arg("seed") = 0)
        .def_property_readonly("seed", &Rng::seed)
        .def("next_u64", &Rng::next_u64)
        .def("uniform01", &Rng::uniform01)
        .def("uniform", &Rng::uniform, py::arg("lo"), py::arg("hi"))
        .def("below", &Rng::below, py::arg("n"));

    m.def("derive_seed", &derive_seed, py::arg("seed"), py::arg("task_id"));
    m.def("fnv1a", [](const std::string& s) { return fnv1a(std::string_view(s)); });
    m.def(
        "uniform_init",
        [](std::size_t rows, std::size_t cols, std::uint64_t seed, double bound) {
            Rng rng(seed);
            return to_array(uniform_init(rows, cols, rng, bound));
        },
        py::arg("rows"), py::arg("cols"), py::arg("seed"), py::arg("bound") = kInitBound);

    py::class_<PyParam>(m, "Parameter")
        .def(py::init([](std::string name, const Array& value) {
                 return PyParam{ParamTensor(std::move(name), to_matrix(value))};
             }),
             py::arg("name"), py::arg("value"))
        .def_property_readonly("name", [](const PyParam& p) { return p.tensor.name; })
        .def_property(
            "value", [](const PyParam& p) { return to_array(p.tensor.value); },
            [](PyParam& p, const Array& a) { p.tensor.value = to_matrix(a); })
        .def_property(
            "grad", [](const PyParam& p) { return to_array(p.tensor.grad); },
            [](PyParam& p, const Array& a) { p.tensor.grad = to_matrix(a); })
        .def_property_readonly("accum", [](const PyParam& p) { return to_array(p.tensor.accum); })
        .def("adagrad_step",
             [](PyParam& p, double lr, double eps) { adagrad_step(p.tensor, lr, eps); },
             py::arg("learning_rate"), py::arg("epsilon") = kAdagradEpsilon);

    // --- embeddings
    py::class_<OovPolicy>(m, "OovPolicy")
        .def(py::init([](double range, std::uint64_t seed) { return OovPolicy{range, seed}; }),
             py::arg("range") = kOovRange, py::arg("seed") = 0)
        .def_readwrite("range", &OovPolicy::range)
        .def_readwrite("seed", &OovPolicy::seed);

    py::class_<EmbeddingTable>(m, "EmbeddingTable")
        .def(py::init([](std::vector<std::string> tokens, const Array& vectors, OovPolicy oov) {
                 return EmbeddingTable(std::move(tokens), to_matrix(vectors), oov);
             }),
             py::arg("tokens"), py::arg("vectors"), py::arg("oov") = OovPolicy{})
        .def_property_readonly("dim", &EmbeddingTable::dim)
        .def_property_readonly("vocab_size", &EmbeddingTable::vocab_size)
        .def_property_readonly("tokens", &EmbeddingTable::tokens)
        .def("__contains__", [](const EmbeddingTable& t, const std::string& s) { return t.contains(s); })
        .def("lookup", [](const EmbeddingTable& t, const std::string& s) { return to_array(t.lookup(s)); })
        .def("embed_sentence",
             [](const EmbeddingTable& t, const std::vector<std::string>& toks) {
                 return to_array(t.embed_sentence(toks));
             })
        .def("checksum", &EmbeddingTable::checksum)
        .def("save_binary", [](const EmbeddingTable& t, const std::filesystem::path& p) { write_word2vec_binary(t, p); })
        .def("save_text", [](const EmbeddingTable& t, const std::filesystem::path& p) { write_word2vec_text(t, p); });

    const auto loader = [](auto fn) {
        return [fn](const std::filesystem::path& path, std::optional<std::size_t> expected_dim, OovPolicy oov) {
            LoadOptions o;
            o.expected_dim = expected_dim;
            o.oov = oov;
            return fn(path, o);
        };
    };
    m.def("load_word2vec_binary", loader(&load_word2vec_binary), py::arg("path"), py::arg("expected_dim") = py::none(),
          py::arg("oov") = OovPolicy{});
    m.def("load_word2vec_text", loader(&load_word2vec_text), py::arg("path"), py::arg("expected_dim") = py::none(),
          py::arg("oov") = OovPolicy{});

    // --- recurrent body and heads
    py::enum_<Body>(m, "Body").value("LSTM", Body::lstm).value("BLSTM", Body::blstm);
    py::enum_<HeadKind>(m, "Head")
        .value("TAIL", HeadKind::tail)
        .value("MEAN_POOL", HeadKind::mean_pool)
        .value("MAX_POOL", HeadKind::max_pool)
        .value("HYBRID_MEAN", HeadKind::hybrid_mean)
        .value("HYBRID_MAX", HeadKind::hybrid_max);
    m.def("parse_head", [](const std::string& s) { return parse_head(s); });
    m.def("parse_body", [](const std::string& s) { return parse_body(s); });
    m.def("model_name", &model_name, py::arg("body"), py::arg("head"));
    m.def("feature_dim", &feature_dim, py::arg("head"), py::arg("body"), py::arg("hidden_dim"));
    m.def("lstm_param_count", &lstm_param_count, py::arg("input_dim"), py::arg("hidden_dim"));
    m.def("blstm_param_count", &blstm_param_count, py::arg("input_dim"), py::arg("hidden_dim"));

    py::class_<HiddenSequence>(m, "HiddenSequence")
        .def_property_readonly("body", &HiddenSequence::body)
        .def_property_readonly("length", &HiddenSequence::length)
        .def_property_readonly("width", &HiddenSequence::width)
        .def_property_readonly("hidden_dim", &HiddenSequence::hidden_dim)
        .def_property_readonly("states", [](const HiddenSequence& s) { return to_array(s.states()); });

    py::class_<FeatureVector>(m, "FeatureVector")
        .def_readonly("kind", &FeatureVector::kind)
        .def_readonly("body", &FeatureVector::body)
        .def_property_readonly("values", [](const FeatureVector& f) { return to_array(f.values); })
        .def_readonly("argmax_trace", &FeatureVector::argmax_trace);

    m.def("feature", [](HeadKind kind, const HiddenSequence& seq) { return compute_feature(kind, seq); },
          py::arg("head"), py::arg("sequence"));

    // --- classifier primitives
    m.def("softmax", [](const Array& logits) { return to_array(softmax(to_vector(logits))); });
    m.def(
        "dropout",
        [](const Array& h, double rate, bool training, std::uint64_t seed) {
            Rng rng(seed);
            auto r = dropout(to_vector(h), rate, training, rng);
            return py::make_tuple(to_array(r.values), to_array(r.mask));
        },
        py::arg("h"), py::arg("rate"), py::arg("training"), py::arg("seed") = 0);

    py::class_<Prediction>(m, "Prediction")
        .def_property_readonly("logits", [](const Prediction& p) { return to_array(p.logits); })
        .def_property_readonly("probs", [](const Prediction& p) { return to_array(p.probs); })
        .def_readonly("label", &Prediction::label)
        .def("cross_entropy", [](const Prediction& p, std::size_t gold) { return cross_entropy(p, gold); });

    // --- data
    m.def("tokenize", [](const std::string& s) { return tokenize(s); });
    py::enum_<Split>(m, "Split")
        .value("TRAIN", Split::train)
        .value("DEV", Split::dev)
        .value("TEST", Split::test)
        .value("UNSPLIT", Split::unsplit);
    py::class_<Example>(m, "Example")
        .def(py::init([](std::string text, std::size_t label, Split split) {
                 return make_example(std::move(text), label, split);
             }),
             py::arg("text"), py::arg("label"), py::arg("split") = Split::unsplit)
        .def_readonly("text", &Example::text)
        .def_readonly("tokens", &Example::tokens)
        .def_readonly("label", &Example::label)
        .def_readonly("split", &Example::split);
    py::class_<Corpus>(m, "Corpus")
        .def_readonly("name", &Corpus::name)
        .def_readonly("classes", &Corpus::classes)
        .def_readonly("examples", &Corpus::examples)
        .def_readonly("has_standard_split", &Corpus::has_standard_split)
        .def("subset", &Corpus::subset)
        .def("__len__", [](const Corpus& c) { return c.examples.size(); });
    m.def("load_dataset",
          [](const std::string& name, const std::vector<std::filesystem::path>& sources) {
              return load_dataset(name, sources);
          },
          py::arg("name"), py::arg("sources"));
    m.def("import_jsonl", [](const std::filesystem::path& p, const std::string& name) { return import_jsonl(p, name); },
          py::arg("path"), py::arg("name"));
    m.def("export_jsonl", &export_jsonl, py::arg("corpus"), py::arg("path"));

    // --- models
    py::class_<ModelConfig>(m, "ModelConfig")
        .def(py::init<>())
        .def_readwrite("body", &ModelConfig::body)
        .def_readwrite("head", &ModelConfig::head)
        .def_readwrite("hidden_dim", &ModelConfig::hidden_dim)
        .def_readwrite("input_dim", &ModelConfig::input_dim)
        .def_readwrite("dropout_rate", &ModelConfig::dropout_rate)
        .def_readwrite("learning_rate", &ModelConfig::learning_rate)
        .def_readwrite("max_epochs", &ModelConfig::max_epochs)
        .def_readwrite("patience", &ModelConfig::patience)
        .def_readwrite("seed", &ModelConfig::seed)
        .def_readwrite("init_bound", &ModelConfig::init_bound)
        .def_readwrite("batch_size", &ModelConfig::batch_size)
        .def_readwrite("clip_norm", &ModelConfig::clip_norm)
        .def("resolved_hidden_dim", &ModelConfig::resolved_hidden_dim)
        .def("validate", &ModelConfig::validate)
        .def("to_json", [](const ModelConfig& c) { return model_config_to_json(c); });

    py::class_<ParamReport>(m, "ParamReport")
        .def_readonly("recurrent", &ParamReport::recurrent)
        .def_readonly("classifier", &ParamReport::classifier)
        .def_readonly("total", &ParamReport::total);

    py::class_<Model>(m, "Model")
        .def(py::init(&build_model), py::arg("config"), py::arg("classes"))
        .def_property_readonly("config", &Model::config)
        .def_property_readonly("classes", &Model::classes)
        .def_property_readonly("feature_dim", &Model::feature_dim)
        .def("encode", [](const Model& md, const Array& xs) { return md.encode(to_matrix(xs)); })
        .def("features", [](const Model& md, const Array& xs) { return md.features(to_matrix(xs)); })
        .def("predict", [](const Model& md, const Array& xs) { return md.predict(to_matrix(xs)); })
        .def("loss", [](const Model& md, const Array& xs, std::size_t gold) { return md.loss(to_matrix(xs), gold); })
        .def("param_report", &param_report)
        .def("checksum", &Model::checksum)
        .def("save", [](const Model& md, const std::filesystem::path& p) { md.save(p); })
        .def_static("load", &Model::load);

    py::class_<EvalResult>(m, "EvalResult")
        .def_readonly("accuracy", &EvalResult::accuracy)
        .def_readonly("n_correct", &EvalResult::n_correct)
        .def_readonly("n_total", &EvalResult::n_total)
        .def_readonly("per_class_total", &EvalResult::per_class_total)
        .def_readonly("per_class_correct", &EvalResult::per_class_correct);

    py::class_<TrainedModel>(m, "TrainedModel")
        .def_readonly("model", &TrainedModel::model)
        .def_readonly("epoch_selected", &TrainedModel::epoch_selected)
        .def_readonly("dev_accuracy_history", &TrainedModel::dev_accuracy_history)
        .def_readonly("train_loss_history", &TrainedModel::train_loss_history);

    m.def(
        "train",
        [](const Model& model, const std::vector<Example>& train_set, const std::vector<Example>& dev_set,
           const EmbeddingTable& embeddings) {
            py::gil_scoped_release release;
            return train(model, train_set, dev_set, embeddings);
        },
        py::arg("model"), py::arg("train"), py::arg("dev"), py::arg("embeddings"));
    m.def("evaluate", &evaluate, py::arg("model"), py::arg("examples"), py::arg("embeddings"));

    // --- reporting
    m.def("format_percent", &format_percent, py::arg("accuracy"));
    m.def("format_improvement", &format_improvement, py::arg("baseline"), py::arg("best"));
    m.def("winner_letter", [](double lstm, double blstm) { return std::string(1, winner_letter(lstm, blstm)); },
          py::arg("lstm_accuracy"), py::arg("blstm_accuracy"));
    m.def(
        "render_report",
        [](const std::filesystem::path& output_dir, const std::string& table, const std::string& fmt) {
            const auto grid = load_grid(output_dir);
            const TableFormat f = fmt == "csv" ? TableFormat::csv : TableFormat::markdown;
            if (table == "results") return render_results_tables(grid, f);
            if (table == "improvement-lstm") return render_improvement_table(grid, Body::lstm, f);
            if (table == "improvement-blstm") return render_improvement_table(grid, Body::blstm, f);
            if (table == "winners") return render_winner_table(grid, f);
            throw InvalidConfig("unknown table '" + table + "'");
        },
        py::arg("output_dir"), py::arg("table") = "results", py::arg("format") = "markdown");
}
