"""Writes coco_vocabulary.json: the 80 COCO categories with common synonyms.

Plural forms are listed explicitly; the matcher does no stemming.
"""
import json
import pathlib

SYNONYMS = {
    "person": ["people", "man", "men", "woman", "women", "boy", "boys", "girl", "girls",
               "child", "children", "kid", "kids", "guy", "guys", "lady", "ladies",
               "player", "players", "baby", "babies", "persons", "adult", "adults",
               "skier", "skiers", "surfer", "surfers", "skateboarder", "snowboarder"],
    "bicycle": ["bike", "bikes", "bicycles", "cycle"],
    "car": ["cars", "automobile", "automobiles", "sedan", "taxi", "taxis"],
    "motorcycle": ["motorcycles", "motorbike", "motorbikes", "scooter", "scooters"],
    "airplane": ["airplanes", "plane", "planes", "aeroplane", "jet", "jets", "aircraft",
                 "airliner"],
    "bus": ["buses", "busses"],
    "train": ["trains", "locomotive", "locomotives"],
    "truck": ["trucks", "pickup truck", "lorry"],
    "boat": ["boats", "ship", "ships", "sailboat", "sailboats", "kayak", "canoe"],
    "traffic light": ["traffic lights", "stoplight", "stop light", "traffic signal"],
    "fire hydrant": ["fire hydrants", "hydrant", "hydrants"],
    "stop sign": ["stop signs"],
    "parking meter": ["parking meters", "meter"],
    "bench": ["benches"],
    "bird": ["birds", "pigeon", "pigeons", "seagull", "seagulls", "duck", "ducks"],
    "cat": ["cats", "kitten", "kittens", "kitty"],
    "dog": ["dogs", "puppy", "puppies", "pup"],
    "horse": ["horses", "pony", "ponies", "foal"],
    "sheep": ["lamb", "lambs", "ram"],
    "cow": ["cows", "cattle", "calf", "calves", "bull", "bulls", "oxen"],
    "elephant": ["elephants"],
    "bear": ["bears", "grizzly", "polar bear"],
    "zebra": ["zebras"],
    "giraffe": ["giraffes"],
    "backpack": ["backpacks", "rucksack"],
    "umbrella": ["umbrellas", "parasol"],
    "handbag": ["handbags", "purse", "purses", "bag", "bags"],
    "tie": ["ties", "necktie", "neckties"],
    "suitcase": ["suitcases", "luggage", "suit case"],
    "frisbee": ["frisbees"],
    "skis": ["ski"],
    "snowboard": ["snowboards"],
    "sports ball": ["ball", "balls", "soccer ball", "football", "baseball", "basketball",
                    "tennis ball", "volleyball"],
    "kite": ["kites"],
    "baseball bat": ["baseball bats", "bat", "bats"],
    "baseball glove": ["baseball gloves", "glove", "gloves", "mitt"],
    "skateboard": ["skateboards"],
    "surfboard": ["surfboards", "surf board"],
    "tennis racket": ["tennis rackets", "racket", "rackets", "racquet"],
    "bottle": ["bottles"],
    "wine glass": ["wine glasses"],
    "cup": ["cups", "mug", "mugs"],
    "fork": ["forks"],
    "knife": ["knives"],
    "spoon": ["spoons"],
    "bowl": ["bowls"],
    "banana": ["bananas"],
    "apple": ["apples"],
    "sandwich": ["sandwiches", "burger", "burgers"],
    "orange": ["oranges"],
    "broccoli": [],
    "carrot": ["carrots"],
    "hot dog": ["hot dogs", "hotdog", "hotdogs"],
    "pizza": ["pizzas"],
    "donut": ["donuts", "doughnut", "doughnuts"],
    "cake": ["cakes", "cupcake", "cupcakes"],
    "chair": ["chairs", "stool", "stools"],
    "couch": ["couches", "sofa", "sofas"],
    "potted plant": ["potted plants", "houseplant", "houseplants", "plant", "plants"],
    "bed": ["beds"],
    "dining table": ["dining tables", "tables", "desk", "desks"],
    "toilet": ["toilets"],
    "tv": ["tvs", "television", "televisions", "tv set"],
    "laptop": ["laptops", "notebook computer"],
    "mouse": ["computer mouse"],
    "remote": ["remotes", "remote control", "controller"],
    "keyboard": ["keyboards"],
    "cell phone": ["cell phones", "phone", "phones", "cellphone", "smartphone",
                   "smartphones", "mobile phone"],
    "microwave": ["microwaves"],
    "oven": ["ovens", "stove", "stoves"],
    "toaster": ["toasters"],
    "sink": ["sinks"],
    "refrigerator": ["refrigerators", "fridge", "fridges"],
    "book": ["books"],
    "clock": ["clocks"],
    "vase": ["vases"],
    "scissors": [],
    "teddy bear": ["teddy bears", "teddy", "stuffed animal"],
    "hair drier": ["hair dryer", "hair driers", "hair dryers", "blow dryer"],
    "toothbrush": ["toothbrushes"],
}


def main() -> None:
    assert len(SYNONYMS) == 80, len(SYNONYMS)
    doc = [{"category": k, "synonyms": v} for k, v in SYNONYMS.items()]
    out = pathlib.Path(__file__).with_name("coco_vocabulary.json")
    out.write_text(json.dumps(doc, indent=1) + "\n")


if __name__ == "__main__":
    main()
