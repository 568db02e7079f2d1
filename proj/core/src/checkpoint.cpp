#include "dae/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <charconv>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "dae/csv.hpp"
#include "dae/error.hpp"

namespace dae {

static_assert(std::endian::native == std::endian::little, "DAE1 I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'D', 'A', 'E', '1'};

std::string join_ints(const std::vector<int>& values) {
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i) s += (i ? "," : "") + std::to_string(values[i]);
    return s;
}

std::string join_doubles(const std::vector<double>& values) {
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i) s += (i ? "," : "") + format_double(values[i]);
    return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string part;
    std::istringstream in(s);
    while (std::getline(in, part, sep)) parts.push_back(part);
    return parts;
}

template <typename T>
T parse_integer(const std::string& text, const std::string& key) {
    T value{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw FormatError("metadata key '" + key + "' is not an integer: '" + text + "'", 8);
    return value;
}

double parse_real(const std::string& text, const std::string& key) {
    try {
        return parse_double(text, 0);
    } catch (const DataError&) {
        throw FormatError("metadata key '" + key + "' is not a number: '" + text + "'", 8);
    }
}

const std::string& require(const std::map<std::string, std::string>& m, const std::string& key) {
    auto it = m.find(key);
    if (it == m.end()) throw FormatError("metadata is missing key '" + key + "'", 8);
    return it->second;
}

CheckpointMetadata metadata_for(const Autoencoder& ae, const TrainConfig& config) {
    CheckpointMetadata m;
    m.layer_sizes = ae.encoder.layer_sizes();
    m.input_dim = ae.input_dim();
    m.loss_power = config.loss_power;
    m.lambda = config.lambda;
    m.seed = config.seed;
    return m;
}

void put_mlp(std::vector<char>& buf, const Mlp& mlp) {
    for (const auto& layer : mlp.layers()) {
        const auto append = [&](const double* data, Eigen::Index n) {
            const char* bytes = reinterpret_cast<const char*>(data);
            buf.insert(buf.end(), bytes, bytes + n * static_cast<Eigen::Index>(sizeof(double)));
        };
        append(layer.weights.data(), layer.weights.size());
        append(layer.bias.data(), layer.bias.size());
    }
}

}  // namespace

std::string encode_metadata(const std::map<std::string, std::string>& entries) {
    std::string out;
    for (const auto& [key, value] : entries) {
        if (key.empty() || key.find_first_of("=\n") != std::string::npos || value.find('\n') != std::string::npos)
            throw ContractError("metadata entry '" + key + "' cannot be encoded");
        out += key + "=" + value + "\n";
    }
    return out;
}

std::map<std::string, std::string> decode_metadata(const std::string& text, std::uint64_t base_offset) {
    std::map<std::string, std::string> entries;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) throw FormatError("metadata line is not newline-terminated", base_offset + pos);
        const std::string line = text.substr(pos, end - pos);
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos || eq == 0) throw FormatError("malformed metadata line '" + line + "'", base_offset + pos);
        if (!entries.emplace(line.substr(0, eq), line.substr(eq + 1)).second)
            throw FormatError("duplicate metadata key '" + line.substr(0, eq) + "'", base_offset + pos);
        pos = end + 1;
    }
    return entries;
}

Checkpoint Checkpoint::from_dual(const DualAutoencoder& model, const TrainConfig& config) {
    Checkpoint c;
    c.metadata = metadata_for(model.ae1, config);
    c.autoencoders = {model.ae1, model.ae2};
    c.stats = model.stats;
    return c;
}

Checkpoint Checkpoint::from_single(const Autoencoder& model, const std::optional<StandardizationStats>& stats,
                                   const TrainConfig& config) {
    Checkpoint c;
    c.metadata = metadata_for(model, config);
    c.metadata.lambda = 0.0;
    c.autoencoders = {model};
    c.stats = stats;
    return c;
}

DualAutoencoder Checkpoint::to_dual() const {
    if (autoencoders.size() != 2)
        throw ContractError("checkpoint holds " + std::to_string(autoencoders.size()) + " autoencoder(s), expected 2");
    DualAutoencoder model;
    model.ae1 = autoencoders[0];
    model.ae2 = autoencoders[1];
    model.stats = stats;
    return model;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
    if (checkpoint.autoencoders.empty() || checkpoint.autoencoders.size() > 2)
        throw ContractError("a checkpoint holds one or two autoencoders");
    const auto& m = checkpoint.metadata;
    std::map<std::string, std::string> entries{
        {"activation", to_string(m.hidden) + "," + to_string(m.latent) + "," + to_string(m.output)},
        {"autoencoders", std::to_string(checkpoint.autoencoders.size())},
        {"input_dim", std::to_string(m.input_dim)},
        {"lambda", format_double(m.lambda)},
        {"layer_sizes", join_ints(m.layer_sizes)},
        {"loss_power", std::to_string(m.loss_power)},
        {"seed", std::to_string(m.seed)},
    };
    if (checkpoint.stats) {
        entries["stats_exempt_padding"] = checkpoint.stats->exempt_padding ? "1" : "0";
        entries["stats_features_per_object"] = std::to_string(checkpoint.stats->features_per_object);
        entries["stats_mean"] = join_doubles(checkpoint.stats->mean);
        entries["stats_std"] = join_doubles(checkpoint.stats->stddev);
    }
    for (const auto& ae : checkpoint.autoencoders)
        if (ae.encoder.layer_sizes() != m.layer_sizes)
            throw ContractError("autoencoder architecture does not match checkpoint metadata");

    const std::string meta = encode_metadata(entries);
    if (meta.size() > std::numeric_limits<std::uint32_t>::max()) throw ContractError("metadata block too large");
    std::vector<char> buf(kMagic, kMagic + 4);
    const auto len = static_cast<std::uint32_t>(meta.size());
    const char* len_bytes = reinterpret_cast<const char*>(&len);
    buf.insert(buf.end(), len_bytes, len_bytes + 4);
    buf.insert(buf.end(), meta.begin(), meta.end());
    for (const auto& ae : checkpoint.autoencoders) {
        put_mlp(buf, ae.encoder);
        put_mlp(buf, ae.decoder);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw DataError("write to '" + path.string() + "' failed");
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "' for reading");
    const std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0) throw FormatError("bad magic, expected \"DAE1\"", 0);
    if (buf.size() < 8) throw FormatError("truncated metadata length", buf.size());
    std::uint32_t meta_len;
    std::memcpy(&meta_len, buf.data() + 4, 4);
    if (buf.size() - 8 < meta_len) throw FormatError("truncated metadata block", buf.size());
    const auto entries = decode_metadata(std::string(buf.data() + 8, meta_len), 8);

    Checkpoint c;
    auto& m = c.metadata;
    const auto activations = split(require(entries, "activation"), ',');
    if (activations.size() != 3) throw FormatError("activation spec needs hidden,latent,output", 8);
    try {
        m.hidden = activation_from_string(activations[0]);
        m.latent = activation_from_string(activations[1]);
        m.output = activation_from_string(activations[2]);
    } catch (const ConfigError& e) {
        throw FormatError(e.what(), 8);
    }
    for (const auto& s : split(require(entries, "layer_sizes"), ',')) m.layer_sizes.push_back(parse_integer<int>(s, "layer_sizes"));
    m.input_dim = parse_integer<int>(require(entries, "input_dim"), "input_dim");
    m.loss_power = parse_integer<int>(require(entries, "loss_power"), "loss_power");
    m.lambda = parse_real(require(entries, "lambda"), "lambda");
    m.seed = parse_integer<std::uint64_t>(require(entries, "seed"), "seed");
    const int n_ae = parse_integer<int>(require(entries, "autoencoders"), "autoencoders");
    if (n_ae < 1 || n_ae > 2) throw FormatError("checkpoint must hold one or two autoencoders", 8);
    if (m.layer_sizes.size() < 2 || m.layer_sizes.front() != m.input_dim)
        throw FormatError("layer_sizes must start with input_dim and have at least two entries", 8);
    for (int s : m.layer_sizes)
        if (s <= 0 || s > (1 << 20)) throw FormatError("layer size out of range", 8);

    if (entries.count("stats_mean")) {
        StandardizationStats stats;
        for (const auto& s : split(require(entries, "stats_mean"), ',')) stats.mean.push_back(parse_real(s, "stats_mean"));
        for (const auto& s : split(require(entries, "stats_std"), ',')) stats.stddev.push_back(parse_real(s, "stats_std"));
        stats.exempt_padding = require(entries, "stats_exempt_padding") == "1";
        stats.features_per_object = parse_integer<int>(require(entries, "stats_features_per_object"), "stats_features_per_object");
        if (stats.mean.size() != static_cast<std::size_t>(m.input_dim) || stats.stddev.size() != stats.mean.size())
            throw FormatError("standardization stats do not match input_dim", 8);
        c.stats = std::move(stats);
    }

    const std::vector<int> enc = m.layer_sizes;
    const std::vector<int> dec(enc.rbegin(), enc.rend());
    std::size_t offset = 8 + meta_len;
    auto read_mlp = [&](const std::vector<int>& sizes, Activation last) {
        std::vector<DenseLayer> layers;
        for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
            const Activation act = k + 2 == sizes.size() ? last : m.hidden;
            DenseLayer layer(sizes[k], sizes[k + 1], act);
            auto fill = [&](double* data, Eigen::Index n) {
                const std::size_t bytes = static_cast<std::size_t>(n) * sizeof(double);
                if (buf.size() - offset < bytes) throw FormatError("truncated parameter block", buf.size());
                std::memcpy(data, buf.data() + offset, bytes);
                for (Eigen::Index i = 0; i < n; ++i)
                    if (!std::isfinite(data[i]))
                        throw FormatError("non-finite parameter", offset + static_cast<std::size_t>(i) * sizeof(double));
                offset += bytes;
            };
            fill(layer.weights.data(), layer.weights.size());
            fill(layer.bias.data(), layer.bias.size());
            layers.push_back(std::move(layer));
        }
        return Mlp(std::move(layers));
    };
    for (int a = 0; a < n_ae; ++a) {
        Autoencoder ae;
        ae.encoder = read_mlp(enc, m.latent);
        ae.decoder = read_mlp(dec, m.output);
        c.autoencoders.push_back(std::move(ae));
    }
    if (offset != buf.size()) throw FormatError("trailing bytes after parameter block", offset);
    return c;
}

}  // namespace dae
