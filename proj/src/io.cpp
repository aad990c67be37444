#include "ckfnet/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace ckfnet {

namespace {

using nlohmann::json;

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    return in;
}

Vector vector_from_json(const json& arr) {
    std::vector<double> v;
    v.reserve(arr.size());
    for (const auto& x : arr) v.push_back(x.get<double>());
    const std::size_t dim = v.size();
    return Vector(dim, std::move(v));
}

void write_vector_array(std::ostream& os, const std::vector<Vector>& rows) {
    os << '[';
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i) os << ',';
        os << '[';
        for (std::size_t j = 0; j < rows[i].dim(); ++j) {
            if (j) os << ',';
            os << fmt17(rows[i][j]);
        }
        os << ']';
    }
    os << ']';
}

}  // namespace

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::uint64_t fnv1a64_bytes(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string file_hash_hex(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot hash missing file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64_bytes(ss.str())));
    return buf;
}

void save_trajectories(const std::string& path, const std::vector<Trajectory>& trajectories) {
    std::ofstream out = open_out(path);
    for (const Trajectory& t : trajectories) {
        out << "{\"traj_id\":" << t.traj_id << ",\"seed\":" << t.seed << ",\"model_id\":\""
            << t.model_id << "\",\"T\":" << t.length() << ",\"states\":";
        write_vector_array(out, t.states);
        out << ",\"measurements\":";
        write_vector_array(out, t.measurements);
        out << "}\n";
    }
}

std::vector<Trajectory> load_trajectories(const std::string& path) {
    std::ifstream in = open_in(path);
    std::vector<Trajectory> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json rec = json::parse(line);
        Trajectory t;
        t.traj_id = rec.at("traj_id").get<std::uint64_t>();
        t.seed = rec.at("seed").get<std::uint64_t>();
        t.model_id = rec.at("model_id").get<std::string>();
        const std::size_t T = rec.at("T").get<std::size_t>();
        for (const auto& row : rec.at("states")) t.states.push_back(vector_from_json(row));
        for (const auto& row : rec.at("measurements"))
            t.measurements.push_back(vector_from_json(row));
        if (t.states.size() != T || t.measurements.size() != T)
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": record length does not match T");
        out.push_back(std::move(t));
    }
    return out;
}

namespace {

void write_tensors(std::ostream& out, const std::vector<TensorRef>& tensors) {
    for (const TensorRef& t : tensors) {
        out << "tensor " << t.name << ' ' << t.rows << ' ' << t.cols << '\n';
        for (std::size_t r = 0; r < t.rows; ++r) {
            for (std::size_t c = 0; c < t.cols; ++c) {
                if (c) out << ' ';
                out << fmt17(t.value[r * t.cols + c]);
            }
            out << '\n';
        }
    }
}

void read_tensors(std::istream& in, const std::vector<TensorRef>& tensors,
                  const std::string& path) {
    for (const TensorRef& t : tensors) {
        std::string tag, name;
        std::size_t rows = 0, cols = 0;
        if (!(in >> tag >> name >> rows >> cols) || tag != "tensor")
            throw std::runtime_error(path + ": expected tensor header for " + t.name);
        if (name != t.name || rows != t.rows || cols != t.cols)
            throw std::runtime_error(path + ": tensor " + name +
                                     " does not match the manifest shape for " + t.name);
        for (std::size_t i = 0; i < t.size(); ++i)
            if (!(in >> t.value[i]))
                throw std::runtime_error(path + ": truncated tensor " + t.name);
    }
}

std::vector<TensorRef> value_views(CkfNetParams& params) {
    // value and grad views alias; only the values are serialized
    ParamTape tape = make_tape(params, params);
    return tape.tensors();
}

}  // namespace

void save_weights(const std::string& path, const CkfNetParams& params) {
    std::ofstream out = open_out(path);
    out << "ckfnet-weights v1\n";
    out << "n " << params.n << "\nm " << params.m << "\nhidden_dim " << params.hidden_dim
        << "\n";
    CkfNetParams& mutable_params = const_cast<CkfNetParams&>(params);
    write_tensors(out, value_views(mutable_params));
}

CkfNetParams load_weights(const std::string& path) {
    std::ifstream in = open_in(path);
    std::string header;
    std::getline(in, header);
    if (header != "ckfnet-weights v1")
        throw std::runtime_error(path + ": not a ckfnet weights file");
    std::string key;
    std::size_t n = 0, m = 0, hidden = 0;
    for (int i = 0; i < 3; ++i) {
        in >> key;
        if (key == "n")
            in >> n;
        else if (key == "m")
            in >> m;
        else if (key == "hidden_dim")
            in >> hidden;
        else
            throw std::runtime_error(path + ": unexpected manifest key " + key);
    }
    if (n == 0 || m == 0 || hidden == 0)
        throw std::runtime_error(path + ": incomplete weights manifest");
    CkfNetParams params = CkfNetParams::zeros(n, m, hidden);
    read_tensors(in, value_views(params), path);
    return params;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt, std::size_t n,
                     std::size_t m) {
    std::ofstream out = open_out(path);
    const CkfNetParams& p = ckpt.params;
    out << "ckfnet-checkpoint v1\n";
    out << "n " << n << "\nm " << m << "\nhidden_dim " << p.hidden_dim << "\n";
    out << "epochs_done " << ckpt.epochs_done << "\n";
    out << "best_val " << fmt17(ckpt.best_val) << "\n";
    out << "best_epoch " << ckpt.best_epoch << "\n";
    out << "fingerprint " << ckpt.fingerprint << "\n";
    out << "adam_step " << ckpt.opt.step << "\n";
    out << "history " << ckpt.history.size() << "\n";
    for (const EpochRecord& r : ckpt.history)
        out << fmt17(r.train_loss) << ' ' << fmt17(r.val_loss) << '\n';

    CkfNetParams& params = const_cast<CkfNetParams&>(ckpt.params);
    CkfNetParams& best = const_cast<CkfNetParams&>(ckpt.best_params);
    out << "section params\n";
    write_tensors(out, value_views(params));
    out << "section best_params\n";
    write_tensors(out, value_views(best));
    out << "section moments\n";
    for (std::size_t ti = 0; ti < ckpt.opt.m.size(); ++ti) {
        out << "moment " << ti << ' ' << ckpt.opt.m[ti].size() << '\n';
        for (std::size_t i = 0; i < ckpt.opt.m[ti].size(); ++i) {
            if (i) out << ' ';
            out << fmt17(ckpt.opt.m[ti][i]);
        }
        out << '\n';
        for (std::size_t i = 0; i < ckpt.opt.v[ti].size(); ++i) {
            if (i) out << ' ';
            out << fmt17(ckpt.opt.v[ti][i]);
        }
        out << '\n';
    }
}

Checkpoint load_checkpoint(const std::string& path, std::size_t* n_out, std::size_t* m_out) {
    std::ifstream in = open_in(path);
    std::string header;
    std::getline(in, header);
    if (header != "ckfnet-checkpoint v1")
        throw std::runtime_error(path + ": not a ckfnet checkpoint");
    std::string key;
    std::size_t n = 0, m = 0, hidden = 0, history_len = 0;
    Checkpoint ckpt;
    in >> key >> n;
    in >> key >> m;
    in >> key >> hidden;
    in >> key >> ckpt.epochs_done;
    in >> key >> ckpt.best_val;
    in >> key >> ckpt.best_epoch;
    in >> key >> ckpt.fingerprint;
    long adam_steps = 0;
    in >> key >> adam_steps;
    in >> key >> history_len;
    ckpt.history.resize(history_len);
    for (auto& r : ckpt.history) in >> r.train_loss >> r.val_loss;

    ckpt.params = CkfNetParams::zeros(n, m, hidden);
    ckpt.best_params = CkfNetParams::zeros(n, m, hidden);
    std::string section, name;
    in >> section >> name;  // "section params"
    read_tensors(in, value_views(ckpt.params), path);
    in >> section >> name;  // "section best_params"
    read_tensors(in, value_views(ckpt.best_params), path);
    in >> section >> name;  // "section moments"

    const std::vector<TensorRef> views = value_views(ckpt.params);
    ckpt.opt.step = adam_steps;
    ckpt.opt.m.resize(views.size());
    ckpt.opt.v.resize(views.size());
    for (std::size_t ti = 0; ti < views.size(); ++ti) {
        std::string tag;
        std::size_t idx = 0, sz = 0;
        if (!(in >> tag >> idx >> sz) || tag != "moment" || idx != ti || sz != views[ti].size())
            throw std::runtime_error(path + ": malformed moment block");
        ckpt.opt.m[ti].resize(sz);
        ckpt.opt.v[ti].resize(sz);
        for (auto& x : ckpt.opt.m[ti]) in >> x;
        for (auto& x : ckpt.opt.v[ti]) in >> x;
    }
    if (!in) throw std::runtime_error(path + ": truncated checkpoint");
    if (n_out) *n_out = n;
    if (m_out) *m_out = m;
    return ckpt;
}

namespace {

const char* kConfigKeys[] = {"model_id",   "T",          "n_train",        "n_val",
                             "n_test",     "hidden_dim", "learning_rate",  "lambda",
                             "sigma_theta_sq", "batch_size", "epochs",     "grad_clip_norm",
                             "base_seed",  "augment",    "augment_range"};

bool known_config_key(const std::string& k) {
    for (const char* key : kConfigKeys)
        if (k == key) return true;
    return false;
}

}  // namespace

TrainingConfig load_training_config(const std::string& path) {
    std::ifstream in = open_in(path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(path + ": config parse error: " + e.what());
    }
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known_config_key(it.key()))
            throw std::runtime_error(path + ": unknown config key '" + it.key() + "'");

    TrainingConfig c;
    auto require_key = [&](const char* key) {
        if (!j.contains(key))
            throw std::runtime_error(path + ": missing config key '" + std::string(key) + "'");
    };
    for (const char* key : {"model_id", "T", "n_train", "n_val", "n_test", "hidden_dim",
                            "learning_rate", "batch_size", "epochs", "grad_clip_norm",
                            "base_seed", "augment", "augment_range"})
        require_key(key);

    c.model_id = j.at("model_id").get<std::string>();
    c.T = j.at("T").get<std::size_t>();
    c.n_train = j.at("n_train").get<std::size_t>();
    c.n_val = j.at("n_val").get<std::size_t>();
    c.n_test = j.at("n_test").get<std::size_t>();
    c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.epochs = j.at("epochs").get<std::size_t>();
    c.grad_clip_norm = j.at("grad_clip_norm").get<double>();
    c.base_seed = j.at("base_seed").get<std::uint64_t>();
    c.augment = j.at("augment").get<bool>();
    c.augment_range = j.at("augment_range").get<double>();

    const bool has_lambda = j.contains("lambda");
    const bool has_sigma = j.contains("sigma_theta_sq");
    if (!has_lambda && !has_sigma)
        throw std::runtime_error(path + ": need lambda or sigma_theta_sq");
    if (has_lambda) c.lambda = j.at("lambda").get<double>();
    if (has_sigma) c.sigma_theta_sq = j.at("sigma_theta_sq").get<double>();
    if (!has_lambda) c.lambda = 1.0 / c.sigma_theta_sq;
    if (!has_sigma) c.sigma_theta_sq = 1.0 / c.lambda;

    validate_config(c);
    return c;
}

std::string config_to_json(const TrainingConfig& c) {
    std::ostringstream os;
    os << "{\n"
       << "  \"model_id\": \"" << c.model_id << "\",\n"
       << "  \"T\": " << c.T << ",\n"
       << "  \"n_train\": " << c.n_train << ",\n"
       << "  \"n_val\": " << c.n_val << ",\n"
       << "  \"n_test\": " << c.n_test << ",\n"
       << "  \"hidden_dim\": " << c.hidden_dim << ",\n"
       << "  \"learning_rate\": " << fmt17(c.learning_rate) << ",\n"
       << "  \"lambda\": " << fmt17(c.lambda) << ",\n"
       << "  \"sigma_theta_sq\": " << fmt17(c.sigma_theta_sq) << ",\n"
       << "  \"batch_size\": " << c.batch_size << ",\n"
       << "  \"epochs\": " << c.epochs << ",\n"
       << "  \"grad_clip_norm\": " << fmt17(c.grad_clip_norm) << ",\n"
       << "  \"base_seed\": " << c.base_seed << ",\n"
       << "  \"augment\": " << (c.augment ? "true" : "false") << ",\n"
       << "  \"augment_range\": " << fmt17(c.augment_range) << "\n"
       << "}\n";
    return os.str();
}

bool is_valid_override_key(const std::string& key) {
    return key == "lr" || known_config_key(key);
}

void apply_override(TrainingConfig& c, const std::string& key_in, const std::string& value) {
    const std::string key = (key_in == "lr") ? "learning_rate" : key_in;
    if (!known_config_key(key))
        throw std::invalid_argument("unknown override key '" + key_in + "'");
    auto as_u64 = [&]() { return std::stoull(value); };
    auto as_size = [&]() { return static_cast<std::size_t>(std::stoull(value)); };
    auto as_double = [&]() { return std::stod(value); };
    if (key == "model_id") c.model_id = value;
    else if (key == "T") c.T = as_size();
    else if (key == "n_train") c.n_train = as_size();
    else if (key == "n_val") c.n_val = as_size();
    else if (key == "n_test") c.n_test = as_size();
    else if (key == "hidden_dim") c.hidden_dim = as_size();
    else if (key == "learning_rate") c.learning_rate = as_double();
    else if (key == "lambda") {
        c.lambda = as_double();
        c.sigma_theta_sq = 1.0 / c.lambda;
    } else if (key == "sigma_theta_sq") {
        c.sigma_theta_sq = as_double();
        c.lambda = 1.0 / c.sigma_theta_sq;
    } else if (key == "batch_size") c.batch_size = as_size();
    else if (key == "epochs") c.epochs = as_size();
    else if (key == "grad_clip_norm") c.grad_clip_norm = as_double();
    else if (key == "base_seed") c.base_seed = as_u64();
    else if (key == "augment") c.augment = (value == "true" || value == "1");
    else if (key == "augment_range") c.augment_range = as_double();
}

void write_eval_csv(const std::string& path, const std::vector<EvalResult>& rows,
                    bool with_time_variance) {
    std::ofstream out = open_out(path);
    out << "model,T,noise_scale,obs_mode,algorithm,amse,time_s";
    if (with_time_variance) out << ",time_var_s2";
    out << '\n';
    for (const EvalResult& r : rows) {
        char time_buf[32];
        std::snprintf(time_buf, sizeof(time_buf), "%.6f", r.mean_time_s);
        out << r.model_id << ',' << r.T << ',' << fmt17(r.noise_scale) << ',' << r.obs_mode
            << ',' << r.algorithm << ',' << fmt17(r.amse) << ',' << time_buf;
        if (with_time_variance) {
            char var_buf[32];
            std::snprintf(var_buf, sizeof(var_buf), "%.9g", r.time_var_s2);
            out << ',' << var_buf;
        }
        out << '\n';
    }
}

void write_loss_history(const std::string& path, const std::vector<EpochRecord>& history) {
    std::ofstream out = open_out(path);
    for (const EpochRecord& r : history) out << fmt17(r.train_loss) << ' ' << fmt17(r.val_loss) << '\n';
}

}  // namespace ckfnet
