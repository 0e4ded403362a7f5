#!/usr/bin/env python3
"""Generate the 20-case synthetic GA-style corpus under cases/.

Agent pairs and timestamps follow the Smallville checkpoints used in the
experiments; the contents (traits, memories, past dialogues, situations) are
synthesized so that block sizes land near the published block statistics
(basic info ~71 words, memory ~1300 words over 30-45 items, previous
dialogues ~330 words over 1-3 items, environment ~70 words).

Usage: python3 tools/make_synthetic_corpus.py [--out cases] [--seed 2023]
"""
import argparse
import json
import os
import random

CASES = [
    ("2023-02-13 07:40:50", "Tamara Taylor", "Carmen Ortiz"),
    ("2023-02-13 09:00:40", "Arthur Burton", "Sam Moore"),
    ("2023-02-13 09:46:20", "Francisco Lopez", "Abigail Chen"),
    ("2023-02-13 10:21:20", "John Lin", "Tom Moreno"),
    ("2023-02-13 11:03:40", "Giorgio Rossi", "Klaus Mueller"),
    ("2023-02-13 11:10:40", "Arthur Burton", "Ryan Park"),
    ("2023-02-13 12:23:50", "Hailey Johnson", "Giorgio Rossi"),
    ("2023-02-13 12:28:10", "Sam Moore", "Yuriko Yamamoto"),
    ("2023-02-13 13:09:10", "Ayesha Khan", "Mei Lin"),
    ("2023-02-13 13:33:20", "Sam Moore", "Abigail Chen"),
    ("2023-02-13 14:28:10", "Carmen Ortiz", "Rajiv Patel"),
    ("2023-02-13 14:46:50", "Maria Lopez", "Ayesha Khan"),
    ("2023-02-13 15:05:20", "Jennifer Moore", "Tamara Taylor"),
    ("2023-02-13 15:36:50", "Ayesha Khan", "Wolfgang Schulz"),
    ("2023-02-13 15:53:50", "Ayesha Khan", "Mei Lin"),
    ("2023-02-13 16:44:20", "Carmen Ortiz", "Latoya Williams"),
    ("2023-02-13 17:18:20", "Maria Lopez", "Ayesha Khan"),
    ("2023-02-13 17:27:00", "Mei Lin", "Eddy Lin"),
    ("2023-02-13 19:36:20", "Francisco Lopez", "Rajiv Patel"),
    ("2023-02-13 20:04:40", "Rajiv Patel", "Hailey Johnson"),
]

PERSONAS = {
    "Tamara Taylor": (40, "kind, curious, organized", "a children's book author who writes stories that teach kindness and is always looking for new ideas from the people around her", "working on her next picture book about friendship and gathering feedback from the neighborhood kids", "Moreno family house"),
    "Carmen Ortiz": (28, "warm, practical, talkative", "the owner of Harvey Oak Supply Store who keeps the shelves stocked for the whole town and enjoys helping customers find exactly what they need", "planning a small sale at the supply store and thinking about new products to offer", "Harvey Oak Supply Store"),
    "Arthur Burton": (42, "crazy, hospitable, creative", "a bartender and bar owner of The Rose and Crown Pub who loves to make people feel welcome and is always looking for ways to make his customers feel special", "creating new cocktails and thinking about hosting events at the pub for the community", "The Rose and Crown Pub"),
    "Sam Moore": (65, "wise, thoughtful, stubborn", "a retired navy officer who is running for the local mayor position and wants to make the town a better place for young people and local businesses", "preparing his campaign for the upcoming mayoral election and meeting with residents", "Moore family house"),
    "Francisco Lopez": (36, "passionate, spontaneous, funny", "an actor and comedian who loves to make people laugh and organizes open mic nights where new performers can try their material", "writing a new comedy sketch and rehearsing for the open mic night at Hobbs Cafe", "Lopez family house"),
    "Abigail Chen": (25, "open-minded, curious, determined", "a digital artist and animator who loves to explore how technology can be used to express ideas and tell stories", "working on an animation project for a local client and experimenting with new tools", "Chen family apartment"),
    "John Lin": (45, "patient, kind, organized", "a pharmacy shopkeeper at the Willow Market and Pharmacy who loves to help people and makes medication easier for his customers", "looking forward to the upcoming local mayoral election and discussing it with neighbors", "Lin family house"),
    "Tom Moreno": (44, "grumpy, hardworking, honest", "a shopkeeper at the Willow Market who keeps the store running smoothly and cares a lot about the prices of goods", "worried about the store's supply costs and curious about the candidates in the election", "Moreno family house"),
    "Giorgio Rossi": (39, "inquisitive, focused, gentle", "a mathematician who studies patterns found in nature and hopes his work can help with medication development", "researching mathematical patterns in nature and planning a talk at the cafe", "Rossi apartment"),
    "Klaus Mueller": (20, "kind, analytical, curious", "a student at Oak Hill College studying sociology who is passionate about social justice and writing a research paper on gentrification", "writing a research paper on the effects of gentrification in low-income communities", "Mueller dorm room"),
    "Ryan Park": (28, "hardworking, kind, creative", "a software engineer who loves building apps that help people find local events and businesses", "working on a mobile app and researching the latest technologies for its interface", "Park apartment"),
    "Hailey Johnson": (30, "curious, ambitious, friendly", "a writer working on her first novel who loves to share ideas with other writers in town", "writing the third chapter of her novel and looking for a quiet place to work", "Johnson apartment"),
    "Yuriko Yamamoto": (42, "pragmatic, sensible, precise", "a tax lawyer who helps people with their finances and loves gardening in her free time", "preparing tax documents for clients and tending her garden in the evening", "Yamamoto house"),
    "Ayesha Khan": (20, "curious, methodical, cheerful", "a student at Oak Hill College writing a senior thesis on the use of language in Shakespeare's plays", "researching her thesis at the library and discussing it with her friends", "Khan dorm room"),
    "Mei Lin": (44, "supportive, loving, patient", "a professor of philosophy at Oak Hill College who loves discussing ideas with her students and her family", "preparing lectures for her philosophy classes and spending time with her son Eddy", "Lin family house"),
    "Rajiv Patel": (27, "easygoing, creative, loyal", "a painter who is inspired by the everyday life of the town and dreams of holding his first exhibition", "working on a new painting series and looking for a space to show his art", "Patel apartment"),
    "Maria Lopez": (21, "energetic, enthusiastic, inquisitive", "a student at Oak Hill College studying physics who streams games online and loves learning about the universe", "studying for her physics exam and planning her next streaming session", "Lopez family house"),
    "Jennifer Moore": (68, "artistic, caring, independent", "an artist who paints landscapes of the town and is active in community projects that support local culture", "painting a new landscape and helping organize a community art show", "Moore family house"),
    "Wolfgang Schulz": (21, "hardworking, passionate, dedicated", "a student at Oak Hill College studying chemistry who is passionate about healthy living and runs every morning", "preparing for a chemistry lab and training for a local race", "Schulz dorm room"),
    "Latoya Williams": (25, "independent, creative, warm", "a photographer who is working on a project about the lives of the people in town", "editing photos for her project and looking for new people to photograph", "Williams apartment"),
    "Eddy Lin": (19, "curious, analytical, musical", "a student at Oak Hill College studying music theory and composition who is always looking for ways to grow as a musician", "composing a new piece of music for his class and practicing the piano", "Lin family house"),
}

PLACES = ["Hobbs Cafe", "The Rose and Crown Pub", "Johnson Park", "the Willow Market and Pharmacy",
          "Oak Hill College library", "Harvey Oak Supply Store", "the town square", "the community center"]
TOPICS = ["the upcoming mayoral election", "the Valentine's Day party at Hobbs Cafe", "local art",
          "job opportunities for young people", "the price of groceries", "a new cocktail recipe",
          "mathematical patterns in nature", "a research paper on gentrification", "the open mic night",
          "a new mobile app", "the town garden", "a community art show", "music composition",
          "a philosophy lecture", "healthy breakfast habits", "a photography project"]
ACTIVITIES = ["have lunch", "take a walk", "work on a project", "grab a coffee", "read a book",
              "meet some friends", "buy supplies", "practice for a performance", "attend a meeting"]
FEELINGS = ["excited", "a little nervous", "curious", "hopeful", "thoughtful", "grateful", "tired but happy"]
REASONS = ["it is a good way to relax after a long morning",
           "several neighbors mentioned it during the week",
           "it might help with the plans for the coming days",
           "it would be a chance to learn something new",
           "it has been on their mind since yesterday evening"]


def memory_item(rng, name, others):
    other = rng.choice(others)
    place = rng.choice(PLACES)
    topic = rng.choice(TOPICS)
    kind = rng.randrange(6)
    if kind == 0:
        s = (f"{name} is planning to {rng.choice(ACTIVITIES)} at {place} this afternoon because "
             f"{rng.choice(REASONS)}, and {name} hopes that {other} will come along so they can talk "
             f"about {topic} together.")
    elif kind == 1:
        s = (f"{name} talked with {other} at {place} about {topic}; {other} seemed {rng.choice(FEELINGS)} "
             f"and mentioned wanting to hear more about it soon, which made {name} feel {rng.choice(FEELINGS)} "
             f"about the rest of the week.")
    elif kind == 2:
        s = (f"{name} knows {other} as someone who often visits {place}, and {name} remembers that "
             f"{other} once shared strong opinions about {topic} while they were waiting in line together.")
    elif kind == 3:
        s = (f"{name} has been thinking about {topic} for several days and believes that talking to "
             f"people like {other} could help, especially since {rng.choice(REASONS)}.")
    elif kind == 4:
        s = (f"{name} saw {other} near {place} earlier today; {other} was on the way to "
             f"{rng.choice(ACTIVITIES)} and looked {rng.choice(FEELINGS)}, so {name} made a note to ask "
             f"about it the next time they meet.")
    else:
        s = (f"{name} feels {rng.choice(FEELINGS)} about {topic} and wants to discuss it with {other} "
             f"and other friends at {place}, because {rng.choice(REASONS)}.")
    return "- " + s


def utterance(rng, speaker, listener):
    topic = rng.choice(TOPICS)
    forms = [
        f"Hi {listener.split()[0]}, have you heard anything new about {topic}?",
        f"I have been thinking about {topic} a lot lately, and I would love to hear what you think about it.",
        f"That sounds great. Maybe we could meet at {rng.choice(PLACES)} later and talk more.",
        f"I was at {rng.choice(PLACES)} this morning and people were talking about {topic}.",
        f"Honestly, I feel {rng.choice(FEELINGS)} about it, but I am glad we are talking.",
        f"Let me know if you need any help with {topic}; I am happy to lend a hand.",
    ]
    return f"{speaker}: {rng.choice(forms)}"


def previous_dialogue(rng, a, b, target_words):
    lines = []
    speakers = [a, b]
    words = 0
    i = 0
    while words < target_words:
        line = utterance(rng, speakers[i % 2], speakers[(i + 1) % 2])
        lines.append(line)
        words += len(line.split())
        i += 1
    return "\n".join(lines)


def basic_info(name):
    age, innate, learned, currently, _ = PERSONAS[name]
    return [
        f"Name: {name}",
        f"Age: {age}",
        f"Innate traits: {innate}",
        f"Learned traits: {name} is {learned}.",
        f"Currently: {name} is {currently}; {name} usually wakes up early, eats breakfast at home, "
        f"and goes to bed around eleven at night.",
    ]


def situation(rng, a, b):
    place = rng.choice(PLACES)
    return (f"{a} was {rng.choice(['having a light lunch', 'taking a short break', 'finishing some work', 'reading the news'])} "
            f"(thinking about {rng.choice(TOPICS)} and planning to {rng.choice(ACTIVITIES)} with a friend later, "
            f"while also keeping an eye on {rng.choice(TOPICS)}) when {a} saw {b} in the middle of "
            f"{rng.choice(['taking a walk around', 'shopping at', 'heading to', 'leaving'])} {place}. "
            f"{a} is initiating a conversation with {b}.")


def make_case(rng, idx, ts, a, b):
    everyone = list(PERSONAS)
    def agent(name, partner):
        others = [partner] * 3 + [n for n in everyone if n not in (name, partner)]
        mem = [memory_item(rng, name, others) for _ in range(rng.randint(30, 37))]
        return {"name": name, "basic_info_items": basic_info(name), "memory_items": mem,
                "human_needs": None}
    n_prev = rng.randint(1, 3)
    prev = [previous_dialogue(rng, a, b, rng.randint(115, 170)) for _ in range(n_prev)]
    loc_place = PERSONAS[a][4]
    stamp = ts.replace("-", "").replace(":", "").replace(" ", "-")
    return {
        "id": f"ga-{idx:02d}-{stamp}",
        "timestamp": ts,
        "variant": "ga",
        "agent_a": agent(a, b),
        "agent_b": agent(b, a),
        "previous_dialogues": prev,
        "environment": {"location": f"main room in {loc_place}", "situation": situation(rng, a, b)},
        "opening_speaker": "a",
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="cases")
    ap.add_argument("--seed", type=int, default=2023)
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    rng = random.Random(args.seed)
    for i, (ts, a, b) in enumerate(CASES, start=1):
        case = make_case(rng, i, ts, a, b)
        with open(os.path.join(args.out, f"case_{i:02d}.json"), "w", encoding="utf-8") as f:
            json.dump(case, f, indent=2, ensure_ascii=False)
            f.write("\n")


if __name__ == "__main__":
    main()
