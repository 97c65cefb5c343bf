// Command-line front end for the extraction pipeline: train a model, run
// it over sentences, score predictions, and query the merged causal
// graph.
//
// Exit codes: 0 success, 1 usage or configuration problem, 2 bad input
// data (missing files, malformed JSON, validation failures), 3 anything
// else.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spear/spear.hpp"

namespace {

spear::SchemaDef resolve_schema(const std::string& name_or_path) {
  if (std::filesystem::exists(name_or_path)) {
    std::ifstream in(name_or_path, std::ios::binary);
    if (!in) throw spear::NotFoundError("cannot open schema file: " + name_or_path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw spear::ParseError(std::string("schema file is not valid JSON: ") + e.what(), e.byte);
    }
    return j.get<spear::SchemaDef>();
  }
  return spear::builtin_schema(name_or_path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw spear::NotFoundError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_output(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  auto parent = std::filesystem::path(out_path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw spear::Error("cannot write to " + out_path);
  out << text;
}

// Sentences for extraction: a corpus JSON (annotations ignored) or plain
// text with one whitespace-tokenized sentence per line.
std::vector<std::vector<std::string>> read_sentences(const std::string& path) {
  std::string text = read_file(path);
  auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && (text[first] == '[' || text[first] == '{')) {
    std::vector<std::vector<std::string>> out;
    for (const auto& s : spear::parse_corpus(text)) out.push_back(s.tokens);
    return out;
  }
  std::vector<std::vector<std::string>> out;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    std::istringstream words(line);
    std::vector<std::string> tokens;
    std::string w;
    while (words >> w) tokens.push_back(w);
    if (!tokens.empty()) out.push_back(std::move(tokens));
  }
  return out;
}

struct CommonFlags {
  std::string corpus;
  std::string model_dir;
  std::string schema_name = "scientific-claims";
  std::string config_path;
  std::string out_path;
  std::string format;
  std::uint64_t seed = 42;
  int epochs = 20;
  int max_span_len = 10;
  double rel_threshold = 0.4;
  double attr_threshold = 0.5;
};

int cmd_train(const CLI::App& cmd, const CommonFlags& f) {
  spear::ModelConfig config;
  bool schema_in_file = false;
  if (!f.config_path.empty()) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file(f.config_path));
    } catch (const nlohmann::json::parse_error& e) {
      throw spear::ParseError(std::string("config file is not valid JSON: ") + e.what(), e.byte);
    }
    config = j.get<spear::ModelConfig>();
    schema_in_file = j.contains("schema");
  }
  if (cmd.count("--schema") > 0 || !schema_in_file)
    config.schema = resolve_schema(f.schema_name);
  if (cmd.count("--seed") > 0) config.seed = f.seed;
  if (cmd.count("--epochs") > 0) config.epochs = f.epochs;
  if (cmd.count("--max-span-len") > 0) config.max_span_len = f.max_span_len;
  if (cmd.count("--rel-threshold") > 0) config.relation_threshold = f.rel_threshold;
  if (cmd.count("--attr-threshold") > 0) config.attribute_threshold = f.attr_threshold;

  auto corpus = spear::load_corpus_file(f.corpus, config.schema);
  auto result = spear::train(corpus, config, &std::cout);
  spear::save_checkpoint(result.model, f.model_dir);

  std::ostringstream log;
  log << std::fixed << std::setprecision(6);
  for (std::size_t i = 0; i < result.epoch_losses.size(); ++i)
    log << "epoch " << (i + 1) << "/" << result.epoch_losses.size() << "  loss "
        << result.epoch_losses[i] << "\n";
  write_output((std::filesystem::path(f.model_dir) / "training_log.txt").string(), log.str());
  std::cout << "checkpoint written to " << f.model_dir << "\n";
  return 0;
}

int cmd_extract(const CLI::App& cmd, const CommonFlags& f) {
  spear::SpearModel model = spear::load_checkpoint(f.model_dir);
  spear::ModelConfig config = model.config;
  if (cmd.count("--rel-threshold") > 0) config.relation_threshold = f.rel_threshold;
  if (cmd.count("--attr-threshold") > 0) config.attribute_threshold = f.attr_threshold;

  std::vector<spear::AnnotatedSentence> predictions;
  for (const auto& tokens : read_sentences(f.corpus))
    predictions.push_back(spear::extract(tokens, model, config));
  write_output(f.out_path, spear::corpus_to_string(predictions));
  return 0;
}

int cmd_evaluate(const CLI::App& cmd, const CommonFlags& f, const std::string& pred_path) {
  spear::SchemaDef schema = resolve_schema(f.schema_name);
  auto gold = spear::load_corpus_file(f.corpus, schema);
  auto pred = spear::load_corpus_file(pred_path, schema);
  spear::EvalReport report = spear::evaluate(gold, pred, schema);
  std::cout << spear::render_report_text(report);
  if (!f.out_path.empty()) {
    std::string format = f.format.empty() ? "json" : f.format;
    if (format == "json")
      write_output(f.out_path, spear::report_to_json(report).dump(2) + "\n");
    else if (format == "text")
      write_output(f.out_path, spear::render_report_text(report));
    else
      throw spear::ConfigError("unknown report format: " + format +
                               " (expected \"json\" or \"text\")");
  }
  (void)cmd;
  return 0;
}

int cmd_traverse(const CommonFlags& f, const std::string& source, const std::string& dest,
                 const std::string& matcher, double threshold, int max_hops) {
  auto corpus = spear::load_corpus_file(f.corpus);
  spear::GlobalGraph graph = spear::merge_corpus(corpus);

  spear::ConceptQuery src_query{source, spear::MatcherKind::lemma, threshold};
  spear::ConceptQuery dst_query{dest, spear::MatcherKind::lemma, threshold};
  std::shared_ptr<spear::Encoder> encoder;
  if (matcher == "vector") {
    src_query.matcher = dst_query.matcher = spear::MatcherKind::vector;
    spear::EncoderConfig ec;
    ec.seed = f.seed;
    encoder = spear::make_encoder(ec);
  } else if (matcher != "lemma") {
    throw spear::ConfigError("unknown matcher: " + matcher + " (expected \"lemma\" or \"vector\")");
  }

  auto sources = spear::match_concepts(src_query, graph, encoder.get());
  auto destinations = spear::match_concepts(dst_query, graph, encoder.get());
  auto paths = spear::find_paths(sources, destinations, graph, max_hops);
  std::string format = f.format.empty() ? "dot" : f.format;
  write_output(f.out_path, spear::export_paths(paths, graph, format));
  std::cerr << paths.size() << " path(s) from " << sources.size() << " source node(s) to "
            << destinations.size() << " destination node(s)\n";
  return 0;
}

int cmd_render(const CommonFlags& f, bool label_modifiers) {
  auto corpus = spear::load_corpus_file(f.corpus);
  spear::GlobalGraph graph = spear::merge_corpus(corpus);
  spear::DotOptions options;
  options.label_modifiers = label_modifiers;
  std::string format = f.format.empty() ? "dot" : f.format;
  write_output(f.out_path, spear::export_graph(graph, format, options));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"span-based entity / attribute / relation extraction toolkit"};
  app.require_subcommand(1);

  CommonFlags f;
  std::string pred_path, source, dest, matcher = "lemma";
  double threshold = 0.5;
  int max_hops = 6;
  bool label_modifiers = false;

  auto* train = app.add_subcommand("train", "train a model and write a checkpoint");
  train->add_option("--corpus", f.corpus, "annotated corpus JSON")->required();
  train->add_option("--model-dir", f.model_dir, "checkpoint directory to create")->required();
  train->add_option("--schema", f.schema_name, "builtin schema name or schema JSON path");
  train->add_option("--config", f.config_path, "model config JSON (flags override it)");
  train->add_option("--seed", f.seed, "random seed");
  train->add_option("--epochs", f.epochs, "training epochs");
  train->add_option("--max-span-len", f.max_span_len, "longest candidate span in tokens");
  train->add_option("--rel-threshold", f.rel_threshold, "relation decision threshold");
  train->add_option("--attr-threshold", f.attr_threshold, "attribute decision threshold");

  auto* extract = app.add_subcommand("extract", "run a trained model over sentences");
  extract->add_option("--corpus", f.corpus, "corpus JSON or plain text, one sentence per line")
      ->required();
  extract->add_option("--model-dir", f.model_dir, "checkpoint directory")->required();
  extract->add_option("--out", f.out_path, "output path (default: stdout)");
  extract->add_option("--rel-threshold", f.rel_threshold, "relation decision threshold");
  extract->add_option("--attr-threshold", f.attr_threshold, "attribute decision threshold");

  auto* evaluate = app.add_subcommand("evaluate", "score predictions against gold annotations");
  evaluate->add_option("--corpus", f.corpus, "gold corpus JSON")->required();
  evaluate->add_option("--pred", pred_path, "predicted corpus JSON")->required();
  evaluate->add_option("--schema", f.schema_name, "builtin schema name or schema JSON path");
  evaluate->add_option("--out", f.out_path, "report output path");
  evaluate->add_option("--format", f.format, "report format for --out: json | text");

  auto* traverse = app.add_subcommand("traverse", "find paths between concepts");
  traverse->add_option("--corpus", f.corpus, "corpus JSON to merge and query")->required();
  traverse->add_option("--source", source, "source concept surface form")->required();
  traverse->add_option("--dest", dest, "destination concept surface form")->required();
  traverse->add_option("--matcher", matcher, "concept matcher: lemma | vector");
  traverse->add_option("--threshold", threshold, "similarity cutoff for the vector matcher");
  traverse->add_option("--max-hops", max_hops, "maximum path length in edges");
  traverse->add_option("--format", f.format, "output format: dot | json");
  traverse->add_option("--out", f.out_path, "output path (default: stdout)");
  traverse->add_option("--seed", f.seed, "encoder seed for the vector matcher");

  auto* render = app.add_subcommand("render", "render a corpus as a graph");
  render->add_option("--corpus", f.corpus, "corpus JSON")->required();
  render->add_option("--format", f.format, "output format: dot | json");
  render->add_option("--out", f.out_path, "output path (default: stdout)");
  render->add_flag("--label-modifiers", label_modifiers, "label modifier edges too");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (train->parsed()) return cmd_train(*train, f);
    if (extract->parsed()) return cmd_extract(*extract, f);
    if (evaluate->parsed()) return cmd_evaluate(*evaluate, f, pred_path);
    if (traverse->parsed()) return cmd_traverse(f, source, dest, matcher, threshold, max_hops);
    if (render->parsed()) return cmd_render(f, label_modifiers);
    std::cerr << "error: no command given\n";
    return 1;
  } catch (const spear::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const spear::ContractViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const spear::Error& e) {
    // Everything else under the library's error root is an input problem.
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
