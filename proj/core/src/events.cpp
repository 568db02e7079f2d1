#include "dae/events.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "dae/csv.hpp"
#include "dae/error.hpp"

namespace dae {

static_assert(std::endian::native == std::endian::little, "EVT1 I/O assumes a little-endian host");

int EventLayout::first_slot(ObjectKind kind) const {
    switch (kind) {
        case ObjectKind::muon: return 0;
        case ObjectKind::electron: return max_muons;
        case ObjectKind::jet: return max_muons + max_electrons;
    }
    return 0;
}

int EventLayout::slot_count(ObjectKind kind) const {
    switch (kind) {
        case ObjectKind::muon: return max_muons;
        case ObjectKind::electron: return max_electrons;
        case ObjectKind::jet: return max_jets;
    }
    return 0;
}

std::vector<std::string> EventLayout::feature_names() const {
    static const std::array<const char*, 4> features = {"pt", "eta", "phi", "m"};
    std::vector<std::string> names;
    names.reserve(n_features());
    auto add = [&](const char* prefix, int count) {
        for (int i = 0; i < count; ++i)
            for (int f = 0; f < features_per_object; ++f)
                names.push_back(std::string(prefix) + std::to_string(i) + "_" + features[f]);
    };
    add("mu", max_muons);
    add("el", max_electrons);
    add("jet", max_jets);
    return names;
}

void EventLayout::validate() const {
    if (max_muons < 0 || max_electrons < 0 || max_jets < 0) throw ConfigError("object counts must be non-negative");
    if (n_objects() == 0) throw ConfigError("layout has no object slots");
    if (features_per_object != 3 && features_per_object != 4)
        throw ConfigError("features_per_object must be 3 or 4, got " + std::to_string(features_per_object));
}

Dataset Dataset::rows(const std::vector<std::size_t>& indices) const {
    Dataset out;
    out.layout = layout;
    out.provenance = provenance;
    out.events.resize(static_cast<Eigen::Index>(indices.size()), events.cols());
    if (labels) out.labels.emplace(indices.size());
    for (std::size_t r = 0; r < indices.size(); ++r) {
        out.events.row(static_cast<Eigen::Index>(r)) = events.row(static_cast<Eigen::Index>(indices[r]));
        if (labels) (*out.labels)[r] = (*labels)[indices[r]];
    }
    return out;
}

void Dataset::validate() const {
    if (events.cols() != layout.n_features())
        throw ContractError("dataset has " + std::to_string(events.cols()) + " columns but layout needs " +
                            std::to_string(layout.n_features()));
    if (labels && labels->size() != size())
        throw ContractError("label count " + std::to_string(labels->size()) + " does not match event count " +
                            std::to_string(size()));
}

namespace {

constexpr std::array<char, 4> kMagic = {'E', 'V', 'T', '1'};
constexpr std::uint8_t kVersion = 1;
constexpr std::size_t kHeaderSize = 16;

template <typename T>
void put(std::vector<char>& buf, T value) {
    char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    buf.insert(buf.end(), bytes, bytes + sizeof(T));
}

template <typename T>
T get(const std::vector<char>& buf, std::size_t offset) {
    T value;
    std::memcpy(&value, buf.data() + offset, sizeof(T));
    return value;
}

std::vector<char> slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "' for reading");
    return std::vector<char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

EventLayout resolve_layout(std::uint32_t n_features, std::optional<EventLayout> expected, std::uint64_t offset) {
    if (expected) {
        if (static_cast<int>(n_features) != expected->n_features())
            throw LayoutMismatchError("file has " + std::to_string(n_features) + " features per event, layout expects " +
                                      std::to_string(expected->n_features()) + " (field at byte offset " +
                                      std::to_string(offset) + ")");
        return *expected;
    }
    EventLayout four;
    EventLayout three;
    three.features_per_object = 3;
    if (static_cast<int>(n_features) == four.n_features()) return four;
    if (static_cast<int>(n_features) == three.n_features()) return three;
    throw LayoutMismatchError("file has " + std::to_string(n_features) +
                              " features per event, which matches no default layout; pass an explicit layout");
}

}  // namespace

void write_events(const std::filesystem::path& path, const Dataset& data) {
    data.validate();
    if (data.events.rows() > std::numeric_limits<std::uint32_t>::max() ||
        data.events.cols() > std::numeric_limits<std::uint32_t>::max())
        throw DataError("dataset too large for the EVT1 format");

    std::vector<char> buf;
    const std::size_t n = data.size();
    const std::size_t f = static_cast<std::size_t>(data.events.cols());
    buf.reserve(kHeaderSize + n * f * 4 + (data.labels ? n * 2 : 0));
    buf.insert(buf.end(), kMagic.begin(), kMagic.end());
    put<std::uint8_t>(buf, kVersion);
    put<std::uint8_t>(buf, data.labels ? 1 : 0);
    put<std::uint16_t>(buf, 0);
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(n));
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(f));
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < f; ++c)
            put<float>(buf, static_cast<float>(data.events(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c))));
    if (data.labels)
        for (auto l : *data.labels) put<std::uint16_t>(buf, l);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw DataError("write to '" + path.string() + "' failed");
}

Dataset read_events(const std::filesystem::path& path, std::optional<EventLayout> expected) {
    const std::vector<char> buf = slurp(path);
    if (buf.size() < 4 || !std::equal(kMagic.begin(), kMagic.end(), buf.begin()))
        throw FormatError("bad magic, expected \"EVT1\"", 0);
    if (buf.size() < kHeaderSize) throw FormatError("truncated EVT1 header", buf.size());
    const auto version = get<std::uint8_t>(buf, 4);
    if (version != kVersion) throw FormatError("unsupported EVT1 version " + std::to_string(version), 4);
    const auto flags = get<std::uint8_t>(buf, 5);
    if ((flags & ~1u) != 0) throw FormatError("unknown EVT1 flag bits", 5);
    if (get<std::uint16_t>(buf, 6) != 0) throw FormatError("reserved EVT1 field is not zero", 6);
    const auto n_events = get<std::uint32_t>(buf, 8);
    const auto n_features = get<std::uint32_t>(buf, 12);
    const bool has_labels = flags & 1u;

    const std::uint64_t n_values = std::uint64_t{n_events} * n_features;
    if (n_values > (std::numeric_limits<std::uint64_t>::max() - kHeaderSize) / 8)
        throw FormatError("EVT1 dimensions overflow", 8);
    const std::uint64_t body_end = kHeaderSize + n_values * 4;
    const std::uint64_t expected_size = body_end + (has_labels ? std::uint64_t{n_events} * 2 : 0);
    if (buf.size() < body_end) throw FormatError("truncated EVT1 event block", buf.size());
    if (buf.size() < expected_size) throw FormatError("truncated EVT1 label block", buf.size());
    if (buf.size() > expected_size) throw FormatError("trailing bytes after EVT1 payload", expected_size);

    Dataset data;
    data.layout = resolve_layout(n_features, expected, 12);
    data.events.resize(n_events, n_features);
    std::size_t offset = kHeaderSize;
    for (std::uint32_t r = 0; r < n_events; ++r)
        for (std::uint32_t c = 0; c < n_features; ++c, offset += 4) data.events(r, c) = get<float>(buf, offset);
    if (has_labels) {
        data.labels.emplace(n_events);
        for (std::uint32_t r = 0; r < n_events; ++r, offset += 2) (*data.labels)[r] = get<std::uint16_t>(buf, offset);
    }
    data.provenance["source"] = path.string();
    return data;
}

void write_events_csv(const std::filesystem::path& path, const Dataset& data) {
    data.validate();
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    auto header = data.layout.feature_names();
    if (data.labels) header.push_back("label");
    out << join_csv(header) << '\n';
    out.precision(9);
    for (std::size_t r = 0; r < data.size(); ++r) {
        for (Eigen::Index c = 0; c < data.events.cols(); ++c) {
            if (c) out << ',';
            out << static_cast<float>(data.events(static_cast<Eigen::Index>(r), c));
        }
        if (data.labels) out << ',' << (*data.labels)[r];
        out << '\n';
    }
    if (!out) throw DataError("write to '" + path.string() + "' failed");
}

Dataset read_events_csv(const std::filesystem::path& path, std::optional<EventLayout> expected) {
    const CsvTable table = read_csv(path);
    std::size_t n_cols = table.header.size();
    const bool has_labels = n_cols > 0 && table.header.back() == "label";
    const std::size_t n_features = has_labels ? n_cols - 1 : n_cols;

    Dataset data;
    data.layout = resolve_layout(static_cast<std::uint32_t>(n_features), expected, 0);
    data.events.resize(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(n_features));
    if (has_labels) data.labels.emplace(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (row.size() != n_cols)
            throw DataError("CSV row " + std::to_string(r + 2) + " has " + std::to_string(row.size()) +
                            " fields, expected " + std::to_string(n_cols));
        for (std::size_t c = 0; c < n_features; ++c)
            data.events(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                static_cast<float>(parse_double(row[c], r + 2));
        if (has_labels) {
            const double l = parse_double(row.back(), r + 2);
            if (l < 0 || l > std::numeric_limits<std::uint16_t>::max() || l != static_cast<std::uint16_t>(l))
                throw DataError("CSV row " + std::to_string(r + 2) + " has an invalid label");
            (*data.labels)[r] = static_cast<std::uint16_t>(l);
        }
    }
    data.provenance["source"] = path.string();
    return data;
}

Dataset load_events(const std::filesystem::path& path, std::optional<EventLayout> expected) {
    if (path.extension() == ".csv") return read_events_csv(path, expected);
    return read_events(path, expected);
}

}  // namespace dae
