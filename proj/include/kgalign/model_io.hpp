#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "kgalign/embedding_table.hpp"
#include "kgalign/error.hpp"
#include "kgalign/json_out.hpp"
#include "kgalign/linear.hpp"
#include "kgalign/matrix.hpp"
#include "kgalign/mlp.hpp"
#include "kgalign/orthogonal.hpp"
#include "kgalign/train.hpp"

namespace kgalign {

/// MLP model file contents: parameters plus the training provenance.
struct MlpModelFile {
    MlpHomogenizer model;
    TrainConfig config;
    std::optional<std::size_t> best_epoch;
    std::vector<EpochStats> history;
};

using AlignmentModel = std::variant<LinearMap, OrthogonalMap, MlpModelFile>;

namespace detail {

inline void write_file(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << body;
    out.flush();
    if (!out) throw IoError("write failed for '" + path + "'");
}

inline std::string matrix_json(const Matrix& m) { return json_array(m.flat()); }

inline Matrix matrix_from_json(const nlohmann::json& arr, std::size_t rows, std::size_t cols,
                               const std::string& what) {
    if (!arr.is_array() || arr.size() != rows * cols)
        throw ParseError(what + ": expected " + std::to_string(rows * cols) + " values");
    Matrix m(rows, cols);
    auto flat = m.flat();
    for (std::size_t i = 0; i < flat.size(); ++i) {
        flat[i] = arr[i].get<double>();
        if (!std::isfinite(flat[i])) throw ParseError(what + ": non-finite value");
    }
    return m;
}

inline std::vector<double> vector_from_json(const nlohmann::json& arr, std::size_t n,
                                            const std::string& what) {
    if (!arr.is_array() || arr.size() != n)
        throw ParseError(what + ": expected " + std::to_string(n) + " values");
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = arr[i].get<double>();
    return v;
}

inline std::string config_json(const TrainConfig& c) {
    std::ostringstream os;
    os << "{\"epochs\":" << c.epochs << ",\"batch_size\":" << c.batch_size
       << ",\"dropout_p\":" << json_num(c.dropout_p)
       << ",\"weight_decay\":" << json_num(c.weight_decay)
       << ",\"learning_rate\":" << json_num(c.learning_rate)
       << ",\"adam_beta1\":" << json_num(c.adam_beta1)
       << ",\"adam_beta2\":" << json_num(c.adam_beta2)
       << ",\"adam_eps\":" << json_num(c.adam_eps) << ",\"seed\":" << c.seed
       << ",\"holdout_fraction\":" << json_num(c.holdout_fraction)
       << ",\"hidden_dim\":" << c.hidden_dim << ",\"ln_eps\":" << json_num(c.ln_eps) << "}";
    return os.str();
}

inline TrainConfig config_from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.epochs = j.at("epochs").get<std::size_t>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.dropout_p = j.at("dropout_p").get<double>();
    c.weight_decay = j.at("weight_decay").get<double>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.adam_beta1 = j.at("adam_beta1").get<double>();
    c.adam_beta2 = j.at("adam_beta2").get<double>();
    c.adam_eps = j.at("adam_eps").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.holdout_fraction = j.at("holdout_fraction").get<double>();
    c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
    c.ln_eps = j.at("ln_eps").get<double>();
    return c;
}

}  // namespace detail

inline void save_linear(const LinearMap& map, const std::string& path) {
    std::ostringstream os;
    os << "{\"kind\":\"linear\",\"d_src\":" << map.d_src() << ",\"d_tgt\":" << map.d_tgt()
       << ",\"W\":" << detail::matrix_json(map.w) << "}\n";
    detail::write_file(path, os.str());
}

inline void save_orthogonal(const OrthogonalMap& map, const std::string& path) {
    std::ostringstream os;
    os << "{\"kind\":\"orthogonal\",\"d_src\":" << map.dim() << ",\"d_tgt\":" << map.dim()
       << ",\"W\":" << detail::matrix_json(map.w) << "}\n";
    detail::write_file(path, os.str());
}

inline void save_mlp(const MlpModelFile& file, const std::string& path) {
    const MlpHomogenizer& m = file.model;
    std::ostringstream os;
    os << "{\"kind\":\"mlp\",\"d_src\":" << m.d_src() << ",\"d_hidden\":" << m.d_hidden()
       << ",\"d_tgt\":" << m.d_tgt() << ",\"ln_eps\":" << json_num(m.ln_eps) << ",\"params\":{"
       << "\"w1\":" << detail::matrix_json(m.w1) << ",\"b1\":" << json_array(m.b1)
       << ",\"ln_gain\":" << json_array(m.ln_gain) << ",\"ln_bias\":" << json_array(m.ln_bias)
       << ",\"w2\":" << detail::matrix_json(m.w2) << ",\"b2\":" << json_array(m.b2) << "}"
       << ",\"config\":" << detail::config_json(file.config) << ",\"best_epoch\":";
    if (file.best_epoch)
        os << *file.best_epoch;
    else
        os << "null";
    os << ",\"history\":[";
    for (std::size_t i = 0; i < file.history.size(); ++i) {
        if (i) os << ',';
        os << "{\"train_mse\":" << json_num(file.history[i].train_mse)
           << ",\"holdout_mse\":" << json_num(file.history[i].holdout_mse) << "}";
    }
    os << "]}\n";
    detail::write_file(path, os.str());
}

/// Parses any of the three model kinds.
inline AlignmentModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": invalid JSON: " + e.what());
    }

    try {
        const std::string kind = j.at("kind").get<std::string>();
        const std::size_t d_src = j.at("d_src").get<std::size_t>();
        const std::size_t d_tgt = j.at("d_tgt").get<std::size_t>();
        if (kind == "linear") {
            return LinearMap{detail::matrix_from_json(j.at("W"), d_src, d_tgt, path + ": W")};
        }
        if (kind == "orthogonal") {
            if (d_src != d_tgt) throw ParseError(path + ": orthogonal model must be square");
            OrthogonalMap map{detail::matrix_from_json(j.at("W"), d_src, d_tgt, path + ": W")};
            if (orthogonality_defect(map.w) > 1e-8)
                throw ParseError(path + ": stored map is not orthogonal");
            return map;
        }
        if (kind == "mlp") {
            const std::size_t d_hidden = j.at("d_hidden").get<std::size_t>();
            MlpModelFile file;
            const auto& p = j.at("params");
            file.model.w1 = detail::matrix_from_json(p.at("w1"), d_src, d_hidden, path + ": w1");
            file.model.b1 = detail::vector_from_json(p.at("b1"), d_hidden, path + ": b1");
            file.model.ln_gain =
                detail::vector_from_json(p.at("ln_gain"), d_hidden, path + ": ln_gain");
            file.model.ln_bias =
                detail::vector_from_json(p.at("ln_bias"), d_hidden, path + ": ln_bias");
            file.model.w2 = detail::matrix_from_json(p.at("w2"), d_hidden, d_tgt, path + ": w2");
            file.model.b2 = detail::vector_from_json(p.at("b2"), d_tgt, path + ": b2");
            file.model.ln_eps = j.at("ln_eps").get<double>();
            file.model.validate();
            file.config = detail::config_from_json(j.at("config"));
            if (j.contains("best_epoch") && !j.at("best_epoch").is_null())
                file.best_epoch = j.at("best_epoch").get<std::size_t>();
            for (const auto& h : j.value("history", nlohmann::json::array()))
                file.history.push_back(
                    {h.at("train_mse").get<double>(), h.at("holdout_mse").get<double>()});
            return file;
        }
        throw ParseError(path + ": unknown model kind '" + kind + "'");
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": malformed model file: " + e.what());
    }
}

/// Applies a loaded model to the given keys of `table`; the result is keyed
/// identically and lives in the model's target space.
inline EmbeddingTable apply_model(const AlignmentModel& model, const EmbeddingTable& table,
                                  const std::vector<std::string>& keys) {
    if (const auto* mlp = std::get_if<MlpModelFile>(&model))
        return export_homogenized(mlp->model, table, keys);

    std::vector<EmbeddingTable::Entry> entries;
    entries.reserve(keys.size());
    std::size_t out_dim = 0;
    if (const auto* lin = std::get_if<LinearMap>(&model)) {
        out_dim = lin->d_tgt();
        for (const auto& key : keys)
            entries.emplace_back(key, apply_linear(*lin, table.vector_for(key)));
    } else {
        const auto& orth = std::get<OrthogonalMap>(model);
        out_dim = orth.dim();
        for (const auto& key : keys)
            entries.emplace_back(key, apply_orthogonal(orth, table.vector_for(key)));
    }
    return EmbeddingTable::from_entries(std::move(entries), out_dim);
}

}  // namespace kgalign
