// hazardkg: end-to-end pipeline for substation hidden-danger records.
// Subcommands: ingest, train, segment, eval, index, search,
//              kg build|query|export, stats, predict.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hazardkg/analytics.hpp"
#include "hazardkg/baselines.hpp"
#include "hazardkg/graph.hpp"
#include "hazardkg/hmm.hpp"
#include "hazardkg/record.hpp"
#include "hazardkg/search.hpp"
#include "hazardkg/unicode.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

bool g_verbose = false;

void vlog(const std::string& msg) {
  if (g_verbose) std::cerr << "[hazardkg] " << msg << "\n";
}

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read file: " + p.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write file: " + p.string());
  os << content;
  if (!os) throw std::runtime_error("write failure: " + p.string());
}

hazardkg::HmmModel load_model(const fs::path& p) {
  return hazardkg::model_from_json(ordered_json::parse(read_file(p)));
}

std::vector<hazardkg::HazardRecord> load_records(const fs::path& p) {
  return hazardkg::records_from_jsonl(read_file(p));
}

std::vector<std::string> load_header_lexicon(const std::string& path) {
  if (path.empty()) return hazardkg::default_header_lexicon();
  std::vector<std::string> out;
  std::istringstream is(read_file(path));
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

// Config file mirrors the pipeline fields; values act as option defaults.
struct PipelineConfig {
  std::string records;
  std::string model;
  std::string index_dir;
  std::string graph;
  int shards = 1;
  double epsilon = 1e-6;
  double factor = 1.5;
  std::string headers;
};

PipelineConfig load_config(const std::string& path) {
  PipelineConfig cfg;
  if (path.empty()) return cfg;
  auto j = ordered_json::parse(read_file(path));
  if (j.contains("records")) cfg.records = j["records"].get<std::string>();
  if (j.contains("model")) cfg.model = j["model"].get<std::string>();
  if (j.contains("index_dir")) cfg.index_dir = j["index_dir"].get<std::string>();
  if (j.contains("graph")) cfg.graph = j["graph"].get<std::string>();
  if (j.contains("shards")) cfg.shards = j["shards"].get<int>();
  if (j.contains("epsilon")) cfg.epsilon = j["epsilon"].get<double>();
  if (j.contains("factor")) cfg.factor = j["factor"].get<double>();
  if (j.contains("headers")) cfg.headers = j["headers"].get<std::string>();
  return cfg;
}

int cmd_ingest(const std::vector<std::string>& inputs, const std::string& out,
               const std::string& headers_path) {
  auto lexicon = load_header_lexicon(headers_path);
  std::vector<hazardkg::HazardRecord> records;
  for (const auto& in : inputs) {
    hazardkg::RawTableText raw{read_file(in), fs::path(in).stem().string()};
    auto pairs = hazardkg::parse_table(raw, lexicon);
    auto cycles = hazardkg::split_header_cycles(pairs);
    int seq = 0;
    for (const auto& cycle : cycles) {
      std::string id = raw.source_name + "-" + std::to_string(++seq);
      auto rec = hazardkg::assemble_record(cycle, id);
      if (rec.date_warning)
        std::cerr << "warning: unparseable date in record " << id << "\n";
      records.push_back(std::move(rec));
    }
    vlog("ingested " + std::to_string(cycles.size()) + " record(s) from " + in);
  }
  write_file(out, hazardkg::records_to_jsonl(records));
  std::cout << "wrote " << records.size() << " record(s) to " << out << "\n";
  return 0;
}

int cmd_train(const std::string& corpus_path, const std::string& out, double epsilon) {
  auto corpus = hazardkg::corpus_from_text(read_file(corpus_path));
  auto model = hazardkg::train_hmm(corpus, epsilon);
  write_file(out, hazardkg::model_to_json(model).dump(2) + "\n");
  std::cout << "trained on " << corpus.size() << " sentence(s), vocab " << model.vocab.size()
            << ", wrote " << out << "\n";
  return 0;
}

int cmd_segment(const std::string& model_path, const std::string& text,
                const std::string& in_path) {
  auto model = load_model(model_path);
  auto run = [&](const std::string& s) {
    auto toks = hazardkg::segment(model, s);
    bool first = true;
    for (const auto& t : toks) {
      if (!first) std::cout << " ";
      std::cout << t;
      first = false;
    }
    std::cout << "\n";
  };
  if (!in_path.empty()) {
    std::istringstream is(read_file(in_path));
    std::string line;
    while (std::getline(is, line)) run(line);
  } else {
    run(text);
  }
  return 0;
}

int cmd_eval(const std::string& model_path, const std::string& gold_path,
             const std::string& baseline) {
  auto model = load_model(model_path);
  std::string gold_text = read_file(gold_path);
  auto corpus_lines = [&]() {
    std::vector<std::vector<std::string>> out;
    std::istringstream is(gold_text);
    std::string line;
    while (std::getline(is, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      std::vector<std::string> words;
      std::istringstream ls(line);
      std::string w;
      while (ls >> w) words.push_back(w);
      if (!words.empty()) out.push_back(words);
    }
    return out;
  }();

  // micro-averaged P/R/F over the whole test set
  auto evaluate = [&](auto&& segment_fn, const std::string& name) {
    long hit = 0, n_pred = 0, n_gold = 0;
    for (const auto& words : corpus_lines) {
      std::string joined;
      for (const auto& w : words) joined += w;
      auto pred = segment_fn(joined);
      auto spans = [](const std::vector<std::string>& toks) {
        std::set<std::pair<size_t, size_t>> out;
        size_t pos = 0;
        for (const auto& t : toks) {
          size_t len = hazardkg::utf8_decode(t).size();
          out.insert({pos, pos + len});
          pos += len;
        }
        return out;
      };
      auto ps = spans(pred), gs = spans(words);
      for (const auto& s : ps)
        if (gs.count(s)) ++hit;
      n_pred += static_cast<long>(ps.size());
      n_gold += static_cast<long>(gs.size());
    }
    double p = n_pred ? static_cast<double>(hit) / n_pred : 0;
    double r = n_gold ? static_cast<double>(hit) / n_gold : 0;
    double f = (p + r) > 0 ? 2 * p * r / (p + r) : 0;
    std::printf("%-22s  P=%6.2f%%  R=%6.2f%%  F=%6.2f%%\n", name.c_str(), 100 * p, 100 * r,
                100 * f);
  };

  std::cout << "model                   precision  recall    f-value\n";
  evaluate([&](const std::string& s) { return hazardkg::segment(model, s); }, "HMM-VA");

  if (baseline == "maxmatch" || baseline == "all") {
    std::set<std::string> dict;
    for (const auto& words : corpus_lines)
      for (const auto& w : words) dict.insert(w);
    evaluate([&](const std::string& s) { return hazardkg::max_match_segment(dict, s); },
             "BM matching (maxmatch)");
  }
  if (baseline == "ngram" || baseline == "all") {
    hazardkg::BigramStats stats;
    for (const auto& words : corpus_lines) {
      std::string joined;
      for (const auto& w : words) joined += w;
      stats.add_text(joined);
    }
    evaluate([&](const std::string& s) { return hazardkg::ngram_segment(stats, s); },
             "N-gram seg");
  }
  return 0;
}

int cmd_index(const std::string& records_path, const std::string& model_path,
              const std::string& dir, int shards) {
  auto model = load_model(model_path);
  auto records = load_records(records_path);
  auto engine = hazardkg::SearchEngine::create(dir, static_cast<uint32_t>(shards));
  engine.index_documents(records, model);
  std::cout << "indexed " << records.size() << " document(s) into " << shards << " shard(s) at "
            << dir << "\n";
  return 0;
}

int cmd_search(const std::string& dir, const std::string& model_path, const std::string& query,
               int k) {
  if (!fs::exists(fs::path(dir) / "meta.json"))
    throw std::runtime_error("missing index dir: " + dir);
  auto model = load_model(model_path);
  auto engine = hazardkg::SearchEngine::open(dir);
  auto hits = engine.search(query, static_cast<size_t>(k), model);
  for (const auto& h : hits) {
    std::cout << h.doc_id << "\t" << h.score << "\t";
    bool first = true;
    for (const auto& t : h.matched_terms) {
      if (!first) std::cout << ",";
      std::cout << t;
      first = false;
    }
    std::cout << "\n";
  }
  std::cout << hits.size() << " hit(s)\n";
  return 0;
}

int cmd_kg_build(const std::string& records_path, const std::string& model_path,
                 const std::string& out) {
  auto model = load_model(model_path);
  auto records = load_records(records_path);
  auto graph = hazardkg::build_graph(records, model, hazardkg::default_lexicons());
  write_file(out, hazardkg::export_graph_json(graph));
  std::cout << "graph: " << graph.node_count() << " node(s), " << graph.edge_count()
            << " edge(s), wrote " << out << "\n";
  return 0;
}

int cmd_kg_query(const std::string& graph_path, const std::string& keywords_csv, int hops,
                 const std::string& out) {
  auto graph = hazardkg::graph_from_json(ordered_json::parse(read_file(graph_path)));
  std::vector<std::string> keywords;
  std::istringstream is(keywords_csv);
  std::string kw;
  while (std::getline(is, kw, ','))
    if (!kw.empty()) keywords.push_back(kw);
  auto sub = hazardkg::query_subgraph(graph, keywords, hops);
  write_file(out, hazardkg::export_graph_json(sub));
  std::cout << "subgraph: " << sub.node_count() << " node(s), " << sub.edge_count()
            << " edge(s), wrote " << out << "\n";
  return 0;
}

int cmd_kg_export(const std::string& graph_path, const std::string& format,
                  const std::string& out) {
  auto graph = hazardkg::graph_from_json(ordered_json::parse(read_file(graph_path)));
  std::string payload;
  if (format == "dot")
    payload = hazardkg::export_graph_dot(graph);
  else if (format == "json")
    payload = hazardkg::export_graph_json(graph);
  else
    throw std::runtime_error("unknown export format: " + format);
  if (out.empty())
    std::cout << payload;
  else
    write_file(out, payload);
  return 0;
}

int cmd_stats(const std::string& records_path, const std::string& out, double factor) {
  auto records = load_records(records_path);
  auto stats = hazardkg::monthly_counts(records);
  std::cout << hazardkg::stats_to_table(stats);
  if (stats.unclassified > 0)
    std::cout << "(" << stats.unclassified << " record(s) without month or type excluded)\n";
  if (!out.empty()) {
    write_file(out, hazardkg::stats_to_csv(stats));
    std::cout << "wrote " << out << "\n";
  }
  if (!stats.months_covered.empty()) {
    for (const auto& [t, m] : hazardkg::seasonal_flags(stats, factor))
      std::cout << "flag: " << hazardkg::hazard_type_code(t) << " ("
                << hazardkg::hazard_type_name(t) << ") elevated in " << hazardkg::month_name(m)
                << "\n";
  }
  return 0;
}

int cmd_predict(const std::string& records_path, const std::string& rules_path) {
  auto records = load_records(records_path);
  auto rules = rules_path.empty()
                   ? hazardkg::default_prediction_rules()
                   : hazardkg::rules_from_json(ordered_json::parse(read_file(rules_path)));
  size_t fired = 0;
  for (const auto& r : records) {
    for (const auto& adv : hazardkg::predict_risks(r, rules)) {
      std::cout << r.id << "\t" << adv.rule_id << "\t" << adv.text << "\n";
      ++fired;
    }
  }
  std::cout << fired << " advisory(ies)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hazardkg: substation hidden-danger text mining pipeline"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_flag("--verbose", g_verbose, "verbose logging");
  app.add_option("--config", config_path, "pipeline config file (json)");

  // option storage; config-file values fill anything left at its default
  std::vector<std::string> in_files;
  std::string out, headers, corpus, model_path, text, in_path, gold, baseline, dir, query,
      graph_path, keywords, format, rules_path, records_path;
  double epsilon = -1, factor = -1;
  int shards = 0, k = 10, hops = 2;

  auto* ingest = app.add_subcommand("ingest", "parse table files into records.jsonl");
  ingest->add_option("--in", in_files, "input table file(s)")->required()->expected(-1);
  ingest->add_option("--out", out, "output records.jsonl")->required();
  ingest->add_option("--headers", headers, "header lexicon file (one per line)");

  auto* train = app.add_subcommand("train", "train the BMES segmentation model");
  train->add_option("--corpus", corpus, "gold corpus (space-separated words per line)")
      ->required();
  train->add_option("--out", out, "output model file")->required();
  train->add_option("--epsilon", epsilon, "smoothing epsilon");

  auto* seg = app.add_subcommand("segment", "segment text with a trained model");
  seg->add_option("--model", model_path, "model file");
  seg->add_option("--text", text, "text to segment");
  seg->add_option("--in", in_path, "file of lines to segment");

  auto* eval = app.add_subcommand("eval", "evaluate segmentation P/R/F against gold");
  eval->add_option("--model", model_path, "model file");
  eval->add_option("--gold", gold, "gold test corpus")->required();
  eval->add_option("--baseline", baseline, "also run a baseline: maxmatch|ngram|all");

  auto* index = app.add_subcommand("index", "index records into the sharded engine");
  index->add_option("--records", records_path, "records.jsonl");
  index->add_option("--model", model_path, "model file");
  index->add_option("--dir", dir, "index directory");
  index->add_option("--shards", shards, "number of shards");

  auto* search = app.add_subcommand("search", "search the index");
  search->add_option("--dir", dir, "index directory");
  search->add_option("--model", model_path, "model file");
  search->add_option("--query", query, "query text")->required();
  search->add_option("-k", k, "top-k results");

  auto* kg = app.add_subcommand("kg", "knowledge graph operations");
  kg->require_subcommand(1);
  auto* kg_build = kg->add_subcommand("build", "build the graph from records");
  kg_build->add_option("--records", records_path, "records.jsonl");
  kg_build->add_option("--model", model_path, "model file");
  kg_build->add_option("--out", out, "output graph.json")->required();
  auto* kg_query = kg->add_subcommand("query", "keyword-driven dynamic subgraph");
  kg_query->add_option("--graph", graph_path, "graph.json")->required();
  kg_query->add_option("--keywords", keywords, "comma-separated keywords")->required();
  kg_query->add_option("--hops", hops, "BFS hop limit");
  kg_query->add_option("--out", out, "output subgraph json")->required();
  auto* kg_export = kg->add_subcommand("export", "export a graph as dot or json");
  kg_export->add_option("--graph", graph_path, "graph.json")->required();
  kg_export->add_option("--format", format, "dot|json")->default_val("dot");
  kg_export->add_option("--out", out, "output file (stdout if omitted)");

  auto* stats = app.add_subcommand("stats", "monthly hazard-type statistics");
  stats->add_option("--records", records_path, "records.jsonl");
  stats->add_option("--out", out, "output csv");
  stats->add_option("--factor", factor, "seasonal flag threshold factor");

  auto* predict = app.add_subcommand("predict", "rule-based risk advisories");
  predict->add_option("--records", records_path, "records.jsonl");
  predict->add_option("--rules", rules_path, "rules file (json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    PipelineConfig cfg = load_config(config_path);
    if (records_path.empty()) records_path = cfg.records;
    if (model_path.empty()) model_path = cfg.model;
    if (dir.empty()) dir = cfg.index_dir;
    if (graph_path.empty()) graph_path = cfg.graph;
    if (headers.empty()) headers = cfg.headers;
    if (shards <= 0) shards = cfg.shards;
    if (epsilon <= 0) epsilon = cfg.epsilon;
    if (factor <= 0) factor = cfg.factor;

    if (ingest->parsed()) return cmd_ingest(in_files, out, headers);
    if (train->parsed()) return cmd_train(corpus, out, epsilon);
    if (seg->parsed()) return cmd_segment(model_path, text, in_path);
    if (eval->parsed()) return cmd_eval(model_path, gold, baseline);
    if (index->parsed()) return cmd_index(records_path, model_path, dir, shards);
    if (search->parsed()) return cmd_search(dir, model_path, query, k);
    if (kg_build->parsed()) return cmd_kg_build(records_path, model_path, out);
    if (kg_query->parsed()) return cmd_kg_query(graph_path, keywords, hops, out);
    if (kg_export->parsed()) return cmd_kg_export(graph_path, format, out);
    if (stats->parsed()) return cmd_stats(records_path, out, factor);
    if (predict->parsed()) return cmd_predict(records_path, rules_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
