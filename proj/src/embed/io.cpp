#include "gyronet/embed.hpp"
#include "gyronet/text.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace gyronet::embed {

namespace geo = gyronet::geometry;

EmbeddingTable export_table(const SkipGramResult& result) {
    EmbeddingTable t;
    t.geometry = result.embeddings.geometry;
    t.dim = result.embeddings.dim;
    t.tokens = result.vocab.tokens;
    t.values = result.embeddings.a;
    return t;
}

void write_embeddings(std::ostream& out, const EmbeddingTable& table) {
    const std::size_t width = table.width();
    if (table.values.size() != table.tokens.size() * width) {
        throw EmbedError("embedding table has inconsistent size");
    }
    out << table.tokens.size() << ' ' << table.dim << ' ' << to_string(table.geometry) << '\n';
    char buf[32];
    for (std::size_t r = 0; r < table.tokens.size(); ++r) {
        out << text::escape_token(table.tokens[r]);
        for (double v : table.row(r)) {
            std::snprintf(buf, sizeof buf, " %.17g", v);
            out << buf;
        }
        out << '\n';
    }
}

EmbeddingTable read_embeddings(std::istream& in) {
    std::string line;
    std::size_t line_no = 1;
    auto fail = [&](const std::string& why) {
        throw EmbedError("embedding file line " + std::to_string(line_no) + ": " + why);
    };
    if (!std::getline(in, line)) {
        fail("missing header");
    }
    EmbeddingTable t;
    std::size_t rows = 0;
    {
        std::istringstream hs(line);
        std::string geom;
        if (!(hs >> rows >> t.dim >> geom)) fail("header must be '<rows> <dim> <geometry>'");
        try {
            t.geometry = parse_geometry(geom);
        } catch (const EmbedError& e) {
            fail(e.what());
        }
    }
    const std::size_t width = t.width();
    t.tokens.reserve(rows);
    t.values.reserve(rows * width);
    for (std::size_t r = 0; r < rows; ++r) {
        ++line_no;
        if (!std::getline(in, line)) fail("expected " + std::to_string(rows) + " rows");
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok)) fail("missing token");
        try {
            t.tokens.push_back(text::unescape_token(tok));
        } catch (const std::exception& e) {
            fail(e.what());
        }
        for (std::size_t i = 0; i < width; ++i) {
            double v = 0.0;
            if (!(ls >> v) || !std::isfinite(v)) fail("expected " + std::to_string(width) + " finite values");
            t.values.push_back(v);
        }
        std::string extra;
        if (ls >> extra) fail("trailing data");
    }
    return t;
}

void save_embeddings(const std::string& path, const EmbeddingTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw EmbedError("cannot write " + path);
    write_embeddings(out, table);
    if (!out) throw EmbedError("failed writing " + path);
}

EmbeddingTable load_embeddings(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw EmbedError("cannot read " + path);
    try {
        return read_embeddings(in);
    } catch (const EmbedError& e) {
        throw EmbedError(path + ": " + e.what());
    }
}

EmbeddingTable convert_table(const EmbeddingTable& table, Geometry target) {
    if (table.geometry == Geometry::Euclidean || target == Geometry::Euclidean) {
        throw EmbedError("conversion is only defined between hyperboloid and poincare tables");
    }
    if (table.geometry == target) return table;
    EmbeddingTable out;
    out.geometry = target;
    out.dim = table.dim;
    out.tokens = table.tokens;
    out.values.reserve(table.tokens.size() * out.width());
    for (std::size_t r = 0; r < table.tokens.size(); ++r) {
        const auto row = table.row(r);
        geo::Vec converted;
        if (target == Geometry::Poincare) {
            converted = geo::to_poincare(geo::HyperboloidPoint::renormalized(row)).coords();
        } else {
            converted = geo::to_hyperboloid(geo::PoincarePoint::clamped({row.begin(), row.end()})).coords();
        }
        out.values.insert(out.values.end(), converted.begin(), converted.end());
    }
    return out;
}

}  // namespace gyronet::embed
