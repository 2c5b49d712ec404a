//! Acceptance run: one PASS/FAIL line per criterion, each with its time
//! limit. Exits non-zero when any criterion fails.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use avatar_sync::config::load_config_file;
use avatar_sync::harness::{run_scenario, RunOptions, Scenario, TransportKind};
use avatar_sync::log::replay_log;
use avatar_sync_core::minigames::{MinigameInput, MinigameState, WordGameState, WordStatus};
use avatar_sync_core::narrative::{QuizQuestion, SceneObject};
use avatar_sync_core::protocol::{ClientGesture, ErrorCode, Message};
use avatar_sync_core::rules::{chaos_decision, ChaosLevel, ChaosThreshold};
use avatar_sync_core::types::{
    ActionOutcome, Animation, Dance, GameMode, GestureEvent, MinigameKind, Pose, SwipeDirection, PALETTE,
};
use avatar_sync_core::{Envelope, NarrativeConfig, PlayerId, RoomState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = Result<String, String>;

struct Criterion {
    name: &'static str,
    limit: Duration,
    run: fn() -> Verdict,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            name: "gesture_mapping",
            limit: Duration::from_secs(1),
            run: gesture_mapping,
        },
        Criterion {
            name: "point_rules",
            limit: Duration::from_secs(10),
            run: point_rules,
        },
        Criterion {
            name: "chaos_ratio",
            limit: Duration::from_secs(1),
            run: chaos_ratio,
        },
        Criterion {
            name: "word_game",
            limit: Duration::from_secs(30),
            run: word_game,
        },
        Criterion {
            name: "consistency_under_latency",
            // checked per run inside; this bounds the whole matrix
            limit: Duration::from_secs(6 * 4 * 10),
            run: consistency_under_latency,
        },
        Criterion {
            name: "deterministic_replay",
            limit: Duration::from_secs(30),
            run: deterministic_replay,
        },
        Criterion {
            name: "colors_and_capacity",
            limit: Duration::from_secs(1),
            run: colors_and_capacity,
        },
        Criterion {
            name: "minigame_cap",
            limit: Duration::from_secs(10),
            run: minigame_cap,
        },
    ];

    let mut failed = 0;
    for c in &criteria {
        let started = Instant::now();
        let verdict = (c.run)();
        let elapsed = started.elapsed();
        let (pass, detail) = match verdict {
            Ok(d) if elapsed <= c.limit => (true, d),
            Ok(d) => (false, format!("{d}; too slow")),
            Err(d) => (false, d),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} {:<27} {:>7} ms / {:>6} ms  {}",
            if pass { "PASS" } else { "FAIL" },
            c.name,
            elapsed.as_millis(),
            c.limit.as_millis(),
            detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn repo_path(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn story() -> Arc<NarrativeConfig> {
    Arc::new(load_config_file(&repo_path("narrative/story.json")).expect("shipped story loads"))
}

fn pid(n: usize) -> PlayerId {
    PlayerId::new(format!("p{n}"))
}

fn send(room: &mut RoomState, who: &PlayerId, payload: Message) -> Vec<Envelope> {
    let env = Envelope::client(room.room_id().to_owned(), who.clone(), 0, payload);
    room.apply_event(&env)
}

fn room_with(players: usize, mode: GameMode, config: Arc<NarrativeConfig>, seed: u64) -> RoomState {
    let mut room = RoomState::new("acc", config, seed);
    for i in 1..=players {
        send(&mut room, &pid(i), Message::Join { display_name: format!("player {i}") });
    }
    send(&mut room, &pid(1), Message::SelectMode(mode));
    room
}

fn gesture(g: GestureEvent) -> Message {
    Message::Gesture(ClientGesture::Classified(g))
}

// ------------------------------------------------------------ criteria

fn gesture_mapping() -> Verdict {
    let table: Vec<(GestureEvent, Dance)> = [
        (GestureEvent::TapBurst { count: 1 }, Dance::Macarena),
        (GestureEvent::TapBurst { count: 2 }, Dance::Samba),
        (GestureEvent::TapBurst { count: 3 }, Dance::MoveIt),
    ]
    .into_iter()
    .chain(SwipeDirection::ALL.map(|direction| (GestureEvent::Swipe { direction }, Dance::Twist)))
    .collect();
    let config = story();
    let mut cases = 0;
    for mode in GameMode::ALL {
        for (g, dance) in &table {
            let mut room = room_with(2, mode, config.clone(), 1);
            let out = send(&mut room, &pid(2), gesture(*g));
            let want = ActionOutcome::Dance(*dance);
            let broadcast = out.iter().find_map(|e| match &e.payload {
                Message::ActionBroadcast { outcome, actor_color, .. } => Some((*outcome, *actor_color)),
                _ => None,
            });
            ensure(
                broadcast == Some((want, room.player(&pid(2)).unwrap().color)),
                || format!("{g:?} in {mode:?}: got {broadcast:?}"),
            )?;
            ensure(room.avatar().animation == Animation::Playing(want), || {
                format!("{g:?}: avatar shows {:?}", room.avatar().animation)
            })?;
            ensure(room.avatar().facing == Some(pid(2)), || format!("{g:?}: avatar not facing the actor"))?;
            cases += 1;
        }
    }
    Ok(format!("{cases} gesture/mode cases"))
}

/// What the oracle expects a gesture to be worth, computed from the ratio.
fn expected_points(mode: GameMode, g: GestureEvent, prior_taps: u64, users: u64, tau: f64) -> u32 {
    let base = match g {
        GestureEvent::TapBurst { count } if count >= 4 => {
            if (prior_taps as f64) / (users as f64) < tau {
                3
            } else {
                2
            }
        }
        _ => 1,
    };
    if mode == GameMode::Toques {
        0
    } else {
        base
    }
}

fn point_rules() -> Verdict {
    let config = story();
    let target = config.mission_target;
    let tau = config.chaos_threshold.as_f64();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut completions = 0;
    for case in 0..10_000 {
        let players = rng.random_range(1..=4usize);
        let mut mode = GameMode::ALL[rng.random_range(0..3)];
        let mut room = room_with(players, mode, config.clone(), case);
        let mut taps: BTreeMap<usize, u64> = BTreeMap::new();
        let mut total = 0u32;
        let mut completed = false;
        for step in 0..rng.random_range(1..=60) {
            let who = rng.random_range(1..=players);
            if rng.random_bool(0.1) {
                mode = GameMode::ALL[rng.random_range(0..3)];
                send(&mut room, &pid(who), Message::SelectMode(mode));
                continue;
            }
            let g = if rng.random_bool(0.2) {
                GestureEvent::Swipe {
                    direction: SwipeDirection::ALL[rng.random_range(0..4)],
                }
            } else {
                GestureEvent::TapBurst {
                    count: rng.random_range(1..=8),
                }
            };
            let prior = taps.get(&who).copied().unwrap_or(0);
            // a finished mission freezes the score
            let want = if completed { 0 } else { expected_points(mode, g, prior, players as u64, tau) };
            if let GestureEvent::TapBurst { .. } = g {
                *taps.entry(who).or_default() += 1;
            }
            let out = send(&mut room, &pid(who), gesture(g));
            let got = out.iter().find_map(|e| match &e.payload {
                Message::ActionBroadcast { points, outcome, .. } => Some((*points, *outcome)),
                _ => None,
            });
            let Some((points, outcome)) = got else {
                return Err(format!("case {case} step {step}: no action broadcast"));
            };
            let kind_ok = matches!(
                (want, outcome),
                (0, _) | (1, ActionOutcome::Dance(_)) | (2, ActionOutcome::SmallChaos(_)) | (3, ActionOutcome::Chaos)
            );
            ensure(points == want && kind_ok, || {
                format!("case {case} step {step}: {g:?} in {mode:?} gave {outcome:?} for {points}, want {want}")
            })?;
            total += want;
            let completions_now: Vec<u32> = out
                .iter()
                .filter_map(|e| match e.payload {
                    Message::MissionComplete { final_total } => Some(final_total),
                    _ => None,
                })
                .collect();
            let crosses = !completed && total >= target;
            ensure(completions_now == if crosses { vec![total] } else { vec![] }, || {
                format!("case {case} step {step}: completion {completions_now:?} at total {total}")
            })?;
            completed |= crosses;
            ensure(room.score() == total && room.mission_complete() == completed, || {
                format!("case {case} step {step}: room score {} vs oracle {total}", room.score())
            })?;
        }
        completions += completed as u32;
    }
    Ok(format!("10000 sequences, {completions} reached the mission"))
}

fn chaos_ratio() -> Verdict {
    let mut checked = 0;
    for tau in [0.5, 1.0, 2.0] {
        let threshold = ChaosThreshold::from_f64(tau).expect("positive");
        for users in 1..=8u64 {
            for taps in 0..=50u64 {
                let r = taps as f64 / users as f64;
                let want = if r < tau { ChaosLevel::Chaos } else { ChaosLevel::SmallChaos };
                let got = chaos_decision(taps, users, threshold).map_err(|e| e.to_string())?;
                ensure(got == want, || format!("taps {taps} users {users} tau {tau}: {got:?}"))?;
                for k in 2..=5 {
                    let scaled = chaos_decision(taps * k, users * k, threshold).map_err(|e| e.to_string())?;
                    ensure(scaled == got, || format!("scaling {taps}/{users} by {k} changed the outcome"))?;
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} grid points, scaling x2..x5"))
}

#[derive(Clone, Debug)]
enum Guess {
    Letter(char),
    Word(String),
}

impl Guess {
    fn text(&self) -> String {
        match self {
            Guess::Letter(c) => c.to_string(),
            Guess::Word(w) => w.clone(),
        }
    }
}

#[derive(Debug, PartialEq)]
struct Hangman {
    status: WordStatus,
    wrongs: u32,
    pattern: String,
    last_accepted: bool,
}

/// Plays the whole history from scratch by the rules of the game.
fn hangman(secret: &str, history: &[Guess]) -> Hangman {
    let mut guessed: BTreeSet<char> = BTreeSet::new();
    let mut wrongs = 0;
    let mut status = WordStatus::InProgress;
    let mut word_won = false;
    let mut last_accepted = true;
    for g in history {
        if status != WordStatus::InProgress {
            last_accepted = false;
            continue;
        }
        last_accepted = true;
        match g {
            Guess::Letter(c) => {
                if guessed.contains(c) {
                    last_accepted = false;
                    continue;
                }
                guessed.insert(*c);
                if !secret.contains(*c) {
                    wrongs += 1;
                }
            }
            Guess::Word(w) => {
                if w == secret {
                    word_won = true;
                } else {
                    wrongs += 1;
                }
            }
        }
        if word_won || secret.chars().all(|c| guessed.contains(&c)) {
            status = WordStatus::Won;
        } else if wrongs == 7 {
            status = WordStatus::Lost;
        }
    }
    let pattern = secret
        .chars()
        .map(|c| if word_won || guessed.contains(&c) { c } else { '_' })
        .collect();
    Hangman {
        status,
        wrongs,
        pattern,
        last_accepted,
    }
}

fn small_words() -> Vec<String> {
    let mut words = vec![String::new()];
    let mut all = Vec::new();
    for _ in 0..4 {
        words = words
            .iter()
            .flat_map(|w| ['a', 'b', 'c'].map(|c| format!("{w}{c}")))
            .collect();
        all.extend(words.iter().cloned());
    }
    all
}

/// Every reachable state of the word game for `secret`, explored over all
/// guess sequences. With `oracle` set, every transition is checked against
/// [`hangman`]. Returns (states, terminal points).
fn explore_word(secret: &str, oracle: bool) -> Result<(usize, Vec<u32>), String> {
    const LETTERS: &str = "abcuvwxyz";
    let mut alphabet: Vec<Guess> = LETTERS.chars().map(Guess::Letter).collect();
    alphabet.push(Guess::Word(secret.to_owned()));
    alphabet.push(Guess::Word("zz".into()));
    // guessed letters, misses and status fix the whole state
    let key = |s: &WordGameState| {
        let letters = s
            .guessed_letters()
            .iter()
            .fold(0u32, |acc, c| acc | 1 << LETTERS.find(*c).expect("known letter"));
        (letters, s.wrong_attempts(), s.status())
    };
    let start = WordGameState::new(secret);
    let mut seen = HashSet::new();
    seen.insert(key(&start));
    let mut queue = VecDeque::from([(start, Vec::<Guess>::new())]);
    let mut terminal_points = Vec::new();
    while let Some((state, history)) = queue.pop_front() {
        for g in &alphabet {
            let mut next = state.clone();
            let accepted = next.guess(&g.text()).is_ok();
            let mut path = Vec::new();
            if oracle {
                path = history.clone();
                path.push(g.clone());
                let want = hangman(secret, &path);
                let got = Hangman {
                    status: next.status(),
                    wrongs: next.wrong_attempts(),
                    pattern: next.pattern(),
                    last_accepted: accepted,
                };
                ensure(got == want, || format!("{secret:?} after {path:?}: {got:?}, oracle {want:?}"))?;
            }
            ensure(next.wrong_attempts() <= 7, || format!("{secret:?}: more than 7 wrong attempts"))?;
            if next.wrong_attempts() == 7 {
                ensure(next.status() == WordStatus::Lost, || {
                    format!("{secret:?} after {path:?}: 7 wrongs but {:?}", next.status())
                })?;
            }
            if accepted && seen.insert(key(&next)) {
                if next.is_finished() {
                    terminal_points.push(next.earned_points());
                } else {
                    queue.push_back((next, path));
                }
            }
        }
    }
    Ok((seen.len(), terminal_points))
}

fn word_game() -> Verdict {
    let words = small_words();
    let mut states = 0;
    let mut lost = 0;
    for w in &words {
        let (n, points) = explore_word(w, true)?;
        states += n;
        lost += points.iter().filter(|p| **p == 0).count();
    }
    Ok(format!("{} words up to 4 letters, {states} states, {lost} lost endings", words.len()))
}

const DUO_SCENARIOS: [&str; 6] = [
    "duo_toques",
    "duo_avatar",
    "duo_surpresa",
    "duo_surpresa_hidden",
    "duo_surpresa_quiz",
    "duo_surpresa_word",
];

fn load_scenario(name: &str) -> Scenario {
    Scenario::load(&repo_path(&format!("scenarios/{name}.json"))).expect("shipped scenario loads")
}

fn consistency_under_latency() -> Verdict {
    let config = story();
    let workers: Vec<_> = DUO_SCENARIOS
        .iter()
        .map(|name| {
            let config = config.clone();
            thread::spawn(move || -> Result<usize, String> {
                let mut scores = Vec::new();
                for jitter in [0, 100, 500, 1000] {
                    let mut scenario = load_scenario(name);
                    scenario.latency.jitter_ms = jitter;
                    let opts = RunOptions {
                        transport: TransportKind::Tcp,
                        ..RunOptions::default()
                    };
                    let started = Instant::now();
                    let report = run_scenario(&scenario, config.clone(), &opts)
                        .map_err(|e| format!("{name} jitter {jitter}: {e}"))?;
                    let took = started.elapsed();
                    ensure(took < Duration::from_secs(10), || format!("{name} jitter {jitter}: took {took:?}"))?;
                    ensure(report.pass, || format!("{name} jitter {jitter}: failed {:?}", report.failed()))?;
                    let streams: BTreeSet<&Vec<u64>> = report.bots.iter().map(|b| &b.stream).collect();
                    ensure(streams.len() == 1, || format!("{name} jitter {jitter}: bots saw different streams"))?;
                    scores.push(report.final_score);
                }
                ensure(scores.windows(2).all(|w| w[0] == w[1]), || {
                    format!("{name}: final scores differ across jitter {scores:?}")
                })?;
                Ok(scores.len())
            })
        })
        .collect();
    let mut runs = 0;
    for w in workers {
        runs += w.join().map_err(|_| "worker panicked".to_string())??;
    }
    Ok(format!("{runs} tcp runs over jitter 0/100/500/1000 ms"))
}

fn shipped_scenarios() -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(repo_path("scenarios"))
        .expect("scenarios directory")
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .filter_map(|p| p.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .collect();
    names.sort();
    names
}

fn deterministic_replay() -> Verdict {
    let config = story();
    let names = shipped_scenarios();
    for name in &names {
        let scenario = load_scenario(name);
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let opts = RunOptions {
            transport: TransportKind::Tcp,
            log_dir: Some(dir.path().to_path_buf()),
            ..RunOptions::default()
        };
        let report = run_scenario(&scenario, config.clone(), &opts).map_err(|e| format!("{name}: {e}"))?;
        let check = report.check("replay").ok_or_else(|| format!("{name}: no replay check"))?;
        ensure(check.pass, || format!("{name}: {}", check.detail))?;
        let log = dir.path().join(format!("{}.jsonl", scenario.room_id));
        let a = replay_log(&log, config.clone(), scenario.seed).map_err(|e| format!("{name}: {e}"))?;
        let b = replay_log(&log, config.clone(), scenario.seed).map_err(|e| format!("{name}: {e}"))?;
        ensure(a.state.snapshot_json() == b.state.snapshot_json(), || {
            format!("{name}: two replays disagree")
        })?;
        ensure(a.state.score() == report.final_score && !a.truncated, || {
            format!("{name}: replayed score {} vs recorded {}", a.state.score(), report.final_score)
        })?;
    }
    Ok(format!("{} scenarios replayed", names.len()))
}

fn colors_and_capacity() -> Verdict {
    let mut room = RoomState::new("acc", story(), 0);
    for i in 1..=8 {
        let out = send(&mut room, &pid(i), Message::Join { display_name: format!("p{i}") });
        ensure(out.iter().any(|e| matches!(e.payload, Message::Welcome { .. })), || {
            format!("join {i} refused")
        })?;
    }
    let colors: BTreeSet<&str> = room.players().values().map(|p| p.color.as_str()).collect();
    ensure(colors.len() == 8, || format!("{} distinct colors for 8 players", colors.len()))?;
    ensure(colors == PALETTE.iter().copied().collect(), || "colors outside the palette".into())?;

    let out = send(&mut room, &pid(9), Message::Join { display_name: "p9".into() });
    ensure(
        out.iter().any(|e| matches!(e.payload, Message::ErrorReply { code: ErrorCode::RoomFull, .. })),
        || "9th join was not refused with RoomFull".into(),
    )?;
    ensure(room.players().len() == 8, || "9th join changed the room".into())?;

    let freed = room.player(&pid(3)).unwrap().color;
    send(&mut room, &pid(3), Message::Leave);
    send(&mut room, &pid(10), Message::Join { display_name: "p10".into() });
    let reused = room.player(&pid(10)).map(|p| p.color);
    ensure(reused == Some(freed), || format!("rejoin got {reused:?}, freed {freed:?}"))?;
    let colors: BTreeSet<&str> = room.players().values().map(|p| p.color.as_str()).collect();
    ensure(colors.len() == 8, || "colors not unique after recycling".into())?;
    Ok("8 distinct, 9th refused, color recycled".into())
}

/// Breadth-first walk over every state reachable with `inputs`; returns
/// the points of every terminal state.
fn terminal_points(start: MinigameState, inputs: &[MinigameInput]) -> Result<Vec<u32>, String> {
    let mut seen = HashSet::new();
    seen.insert(format!("{start:?}"));
    let mut queue = VecDeque::from([start]);
    let mut points = Vec::new();
    while let Some(state) = queue.pop_front() {
        if state.is_finished() {
            points.push(state.points().map_err(|e| e.to_string())?);
            continue;
        }
        ensure(state.points().is_err(), || format!("points before finishing: {state:?}"))?;
        for input in inputs {
            let mut next = state.clone();
            if next.apply(input).is_ok() && seen.insert(format!("{next:?}")) {
                queue.push_back(next);
            }
        }
    }
    Ok(points)
}

fn minigame_cap() -> Verdict {
    let base = story();
    let mut terminals = 0;
    let mut best = 0;
    let mut record = |points: Vec<u32>, what: String| -> Result<(), String> {
        let max = points.iter().copied().max().unwrap_or(0);
        ensure(max <= 4, || format!("{what}: a terminal state is worth {max}"))?;
        terminals += points.len();
        best = best.max(max);
        Ok(())
    };

    for n in 1..=3 {
        let mut cfg = (*base).clone();
        cfg.hidden_objects.objects = (0..n)
            .map(|i| SceneObject {
                id: format!("o{i}"),
                x: 0.0,
                y: 0.0,
            })
            .collect();
        let target = cfg.hidden_objects.target_pose;
        let mut inputs = vec![
            MinigameInput::PlaceMarker(target),
            MinigameInput::PlaceMarker(Pose::new(target.x + 50.0, target.y, target.rot_deg)),
            MinigameInput::FindObject { object_id: "nope".into() },
            MinigameInput::UseKey,
            MinigameInput::Abandon,
        ];
        inputs.extend((0..n).map(|i| MinigameInput::FindObject { object_id: format!("o{i}") }));
        let start = MinigameState::start(MinigameKind::HiddenObjects, &cfg, 0);
        record(terminal_points(start, &inputs)?, format!("hidden objects x{n}"))?;
    }

    for n in 1..=5 {
        let mut cfg = (*base).clone();
        cfg.quiz = (0..n)
            .map(|i| QuizQuestion {
                question: format!("q{i}"),
                accepted_answers: vec![format!("a{i}")],
            })
            .collect();
        let mut inputs: Vec<MinigameInput> = (0..n)
            .map(|i| MinigameInput::Answer { transcript: format!("a{i}") })
            .collect();
        inputs.push(MinigameInput::Answer { transcript: "wrong".into() });
        inputs.push(MinigameInput::Abandon);
        let start = MinigameState::start(MinigameKind::Quiz, &cfg, 0);
        let points = terminal_points(start, &inputs)?;
        ensure(points.iter().all(|p| *p <= (n as u32).min(4)), || format!("quiz x{n}: above min(4, n)"))?;
        record(points, format!("quiz x{n}"))?;
    }

    for w in small_words() {
        let (_, points) = explore_word(&w, false)?;
        record(points, format!("word {w:?}"))?;
    }
    ensure(best == 4, || format!("best outcome is {best}, the cap is never reached"))?;
    Ok(format!("{terminals} terminal states, best {best}"))
}
