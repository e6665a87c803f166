// Command-line front end: bench, run, eval, convert, serve.
// Exit codes: 0 success, 1 bad input, 2 internal error.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "iglu/commands.hpp"
#include "iglu/server.hpp"

namespace {

using iglu::InputError;
using nlohmann::json;

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path + ": cannot open");
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(std::move(l));
  return lines;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(path + ": cannot write");
  out << text;
}

bool on_off(const std::string& v) {
  if (v == "on") return true;
  if (v == "off") return false;
  throw InputError("expected on or off, got '" + v + "'");
}

std::vector<iglu::TaskRecord> tasks_from(const std::string& path) {
  try {
    return iglu::load_tasks(path);
  } catch (const iglu::TaskFileError& e) {
    throw InputError(e.what());
  }
}

volatile std::sig_atomic_t g_stop = 0;
extern "C" void on_signal(int) { g_stop = 1; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collaborative block-building environment tools"};
  app.require_subcommand(1);

  // bench
  iglu::BenchOptions bench;
  std::string bench_render = "off", bench_json;
  auto* b = app.add_subcommand("bench", "Measure environment throughput with a seeded random policy");
  b->add_option("--steps", bench.steps, "Total environment steps")->capture_default_str();
  b->add_option("--render", bench_render, "Render observations: on|off")->capture_default_str();
  b->add_option("--episodes", bench.episodes, "Distinct generated tasks to cycle through")->capture_default_str();
  b->add_option("--seed", bench.seed, "Seed for tasks and policy")->capture_default_str();
  b->add_option("--json", bench_json, "Write the report as JSON");
  b->add_option("--dump-frames", bench.dump_frames, "Write the first frames as PPM files (needs --render on)");

  // run
  iglu::RunOptions run;
  std::string run_task, run_out, run_trace, run_config, run_render;
  std::size_t run_generate = 0;
  auto* r = app.add_subcommand("run", "Run an agent on tasks and report per-episode results");
  auto* task_opt = r->add_option("--task", run_task, "Task file (JSON)");
  r->add_option("--generate", run_generate, "Generate N tasks instead of reading a file")->excludes(task_opt);
  r->add_option("--agent", run.agent, "scripted|random")->capture_default_str();
  r->add_option("--max-steps", run.max_steps, "Step budget per episode")->capture_default_str();
  r->add_option("--seed", run.seed, "Base seed (episode i uses seed+i)")->capture_default_str();
  r->add_option("--out", run_out, "Write the report as JSON");
  r->add_option("--trace", run_trace, "Write one JSON line per step");
  r->add_option("--render", run_render, "Render observations: on|off");
  r->add_option("--config", run_config, "Episode configuration (JSON file)");

  // eval
  std::string eval_log, eval_tasks, eval_out, eval_align = "maximized";
  auto* e = app.add_subcommand("eval", "Score final snapshots of demonstrations against their targets");
  e->add_option("--log", eval_log, "Demonstration JSON lines")->required();
  e->add_option("--tasks", eval_tasks, "Task file")->required();
  e->add_option("--alignment", eval_align, "maximized|identity")->capture_default_str();
  e->add_option("--out", eval_out, "Write the report as JSON");

  // convert
  std::string conv_raw, conv_out, conv_tasks, conv_map;
  auto* c = app.add_subcommand("convert", "Convert raw behaviour records into step-wise demonstrations");
  c->add_option("--raw", conv_raw, "Raw record file (one object or a JSON array)")->required();
  c->add_option("--out", conv_out, "Demonstration JSON lines")->required();
  c->add_option("--tasks-out", conv_tasks, "Write a task file with one task per record");
  c->add_option("--map", conv_map, "Block id and coordinate offset map (JSON)");

  // serve
  iglu::ServerOptions serve;
  std::string serve_mode = "agent_eval";
  int serve_port = -1;
  auto* s = app.add_subcommand("serve", "Serve the WebSocket session protocol");
  s->add_option("--host", serve.address, "Listen address")->capture_default_str();
  s->add_option("--port", serve_port, "Listen port (default: $IGLU_PORT or 8765)");
  s->add_option("--mode", serve_mode, "human_collect|agent_eval")->capture_default_str();
  s->add_option("--static", serve.static_dir, "Directory of browser client assets");
  s->add_option("--max-sessions", serve.max_sessions, "Concurrent session limit")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*b) {
      bench.render = on_off(bench_render);
      const json rep = iglu::cmd_bench(bench);
      std::cout << iglu::bench_text(rep) << "action digest " << rep["action_digest"].get<std::uint64_t>() << "\n";
      if (!bench_json.empty()) write_text(bench_json, rep.dump(2) + "\n");
    } else if (*r) {
      std::vector<iglu::TaskRecord> tasks;
      if (!run_task.empty()) tasks = tasks_from(run_task);
      else if (run_generate > 0) tasks = iglu::generate_suite(run_generate, run.seed);
      else throw InputError("run needs --task FILE or --generate N");
      if (!run_config.empty()) {
        try {
          run.config = iglu::config_from_json(iglu::parse_json_text(iglu::read_text_file(run_config), run_config));
        } catch (const std::exception& ex) {
          throw InputError(run_config + ": " + ex.what());
        }
      }
      if (!run_render.empty()) run.config.render = on_off(run_render);
      std::ofstream trace;
      if (!run_trace.empty()) {
        trace.open(run_trace);
        if (!trace) throw InputError(run_trace + ": cannot write");
        run.trace = [&](const json& line) { trace << line.dump() << "\n"; };
      }
      const json rep = iglu::cmd_run(tasks, run);
      std::cout << iglu::run_text(rep);
      if (!run_out.empty()) write_text(run_out, rep.dump(2) + "\n");
    } else if (*e) {
      iglu::F1Alignment align;
      if (eval_align == "maximized") align = iglu::F1Alignment::Maximized;
      else if (eval_align == "identity") align = iglu::F1Alignment::Identity;
      else throw InputError("--alignment must be maximized or identity");
      const json rep = iglu::cmd_eval(read_lines(eval_log), tasks_from(eval_tasks), align);
      for (const auto& t : rep["tasks"])
        std::printf("%-24s f1 %.4f%s\n", t["task_id"].get<std::string>().c_str(), t["f1"].get<double>(),
                    t["has_demo"].get<bool>() ? "" : "  (no demonstration)");
      std::printf("mean f1 %.4f over %zu tasks\n", rep["mean_f1"].get<double>(), rep["tasks"].size());
      if (!eval_out.empty()) write_text(eval_out, rep.dump(2) + "\n");
    } else if (*c) {
      iglu::IdOffsetMap map;
      if (!conv_map.empty()) {
        try {
          map = iglu::id_map_from_json(iglu::parse_json_text(iglu::read_text_file(conv_map), conv_map));
        } catch (const std::exception& ex) {
          throw InputError(conv_map + ": " + ex.what());
        }
      }
      std::string raw;
      try {
        raw = iglu::read_text_file(conv_raw);
      } catch (const std::exception& ex) {
        throw InputError(ex.what());
      }
      const auto res = iglu::cmd_convert(raw, map);
      for (const auto& m : res.messages) std::cerr << m << "\n";
      std::string lines;
      for (const auto& l : res.demo_lines) lines += l + "\n";
      write_text(conv_out, lines);
      if (!conv_tasks.empty()) iglu::save_tasks(res.tasks, conv_tasks);
      std::cout << res.summary.dump() << "\n";
      if (res.summary["failed"].get<int>() > 0 || res.summary["parsed"].get<int>() == 0) return 1;
    } else if (*s) {
      try {
        serve.mode = iglu::parse_mode(serve_mode);
        if (serve_port > 65535) throw std::invalid_argument("--port out of range");
        serve.port = serve_port >= 0 ? static_cast<unsigned short>(serve_port) : iglu::default_port();
      } catch (const std::invalid_argument& ex) {
        throw InputError(ex.what());
      }
      if (!serve.static_dir.empty() && !std::filesystem::is_directory(serve.static_dir))
        throw InputError(serve.static_dir + ": not a directory");
      iglu::Server server(serve);
      server.start();
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cout << "listening on " << serve.address << ":" << server.port() << " (" << serve_mode << ")" << std::endl;
      while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
      server.stop();
    }
  } catch (const InputError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  } catch (const std::exception& ex) {
    std::cerr << "internal error: " << ex.what() << "\n";
    return 2;
  }
  return 0;
}
