// umpired: floor control server for one conference.

#include "umpire/daemon.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <csignal>
#include <iostream>

int main(int argc, char** argv) {
    umpire::DaemonOptions o;
    std::vector<std::string> floors;
    unsigned max_granted = 1;
    bool auto_grant = false;
    unsigned retention_secs = 30;
    unsigned debounce_ms = 2000;
    std::uint16_t badge_port = 0;
    std::string badge_dir, ui_dir, log_level = "info";

    CLI::App app{"BFCP floor control server with chair HTTP API and badge feed", "umpired"};
    app.option_defaults()->always_capture_default();
    app.add_option("--host", o.host, "Address to listen on");
    app.add_option("--bfcp-port", o.bfcp_port, "BFCP over TCP");
    app.add_option("--http-port", o.http_port, "Chair API, web participants and event stream");
    app.add_option("--conference-id", o.conference.id)->check(CLI::PositiveNumber);
    app.add_option("--floor", floors, "Floor as id:name; repeatable (default 1:audio)");
    app.add_option("--max-granted", max_granted, "Concurrent grants per floor")->check(CLI::PositiveNumber);
    app.add_flag("--auto-grant", auto_grant, "Grant new requests without chair action while a slot is free");
    app.add_option("--chair-token", o.conference.chair_token, "Shared chair secret")
        ->envname("UMPIRE_CHAIR_TOKEN")
        ->required();
    app.add_option("--terminal-retention-secs", retention_secs,
                   "How long finished requests stay visible in the queue");
    app.add_option("--badge-port", badge_port, "TCP port for the badge feed (0 disables)");
    app.add_flag("--badge-stdin", o.badge_stdin, "Also read badge lines from standard input");
    app.add_option("--badge-directory", badge_dir, "CSV of tag,user_id,display_name and reader,<id>,<floor>")
        ->check(CLI::ExistingFile);
    app.add_option("--debounce-ms", debounce_ms, "Repeat reads of a badge within this window are dropped");
    app.add_option("--ui-dir", ui_dir, "Static console files served at /")->check(CLI::ExistingDirectory);
    app.add_option("--log-level", log_level)->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));
    CLI11_PARSE(app, argc, argv);

    spdlog::set_level(spdlog::level::from_str(log_level));

    try {
        if (!floors.empty()) {
            o.conference.floors.clear();
            for (const auto& f : floors) o.conference.floors.push_back(umpire::parse_floor_spec(f));
        }
        o.conference.policy.max_granted = static_cast<std::uint16_t>(max_granted);
        o.conference.policy.auto_grant = auto_grant;
        o.conference.terminal_retention = std::chrono::seconds(retention_secs);
        o.debounce = std::chrono::milliseconds(debounce_ms);
        if (badge_port) o.badge_port = badge_port;
        if (!badge_dir.empty()) o.badge_directory = badge_dir;
        if (!ui_dir.empty()) o.ui_dir = ui_dir;
        if (o.badge_stdin && !o.badge_directory) throw std::invalid_argument("--badge-stdin needs --badge-directory");
        if (o.badge_port && !o.badge_directory) throw std::invalid_argument("--badge-port needs --badge-directory");

        // Signals are taken synchronously below; every thread inherits the mask.
        sigset_t sigs;
        sigemptyset(&sigs);
        sigaddset(&sigs, SIGINT);
        sigaddset(&sigs, SIGTERM);
        pthread_sigmask(SIG_BLOCK, &sigs, nullptr);

        umpire::Daemon daemon(std::move(o));
        daemon.start();
        spdlog::info("listening: bfcp {} http {}{}", daemon.bfcp_port(), daemon.http_port(),
                     daemon.badge_port() ? " badge " + std::to_string(daemon.badge_port()) : std::string());

        int sig = 0;
        sigwait(&sigs, &sig);
        spdlog::info("signal {}, shutting down", sig);
        daemon.stop();
    } catch (const std::exception& e) {
        std::cerr << "umpired: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
