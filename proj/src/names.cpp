#include "names.hpp"

#include <cstddef>

namespace khop {
namespace {

const char* const kEntityNames[] = {
    "Emil", "Gavin", "Chad", "Flora", "Adam", "Addie", "Bobby", "Edwin",
    "Gabby", "Helen", "Jeffery", "Joel", "Kris", "Kristen", "Lisa", "Liam",
    "Eva", "Emma", "Dylan", "Isabella", "Jennifer", "Robert", "William", "Frank",
    "James", "John", "Michael", "David", "Richard", "Joseph", "Thomas", "Charles",
    "Christopher", "Daniel", "Matthew", "Anthony", "Mark", "Donald", "Steven", "Paul",
    "Andrew", "Joshua", "Kenneth", "Kevin", "Brian", "George", "Timothy", "Ronald",
    "Edward", "Jason", "Jeffrey", "Ryan", "Jacob", "Nicholas", "Eric", "Jonathan",
    "Stephen", "Larry", "Justin", "Scott", "Brandon", "Benjamin", "Samuel", "Gregory",
    "Alexander", "Patrick", "Jack", "Dennis", "Jerry", "Tyler", "Aaron", "Jose",
    "Adamo", "Nathan", "Henry", "Douglas", "Zachary", "Peter", "Kyle", "Noah",
    "Ethan", "Jeremy", "Walter", "Christian", "Keith", "Roger", "Terry", "Austin",
    "Sean", "Gerald", "Carl", "Harold", "Jordan", "Jesse", "Bryan", "Lawrence",
    "Arthur", "Gabriel", "Bruce", "Logan", "Billy", "Joe", "Alan", "Juan",
    "Elijah", "Willie", "Albert", "Wayne", "Randy", "Mason", "Vincent", "Ralph",
    "Roy", "Bradley", "Eugene", "Russell", "Louis", "Bobbie", "Philip", "Johnny",
    "Howard", "Caleb", "Mary", "Patricia", "Linda", "Barbara", "Elizabeth", "Maria",
    "Susan", "Margaret", "Dorothy", "Sarah", "Karen", "Nancy", "Betty", "Sandra",
    "Ashley", "Kimberly", "Donna", "Carol", "Michelle", "Amanda", "Melissa", "Deborah",
    "Stephanie", "Rebecca", "Sharon", "Laura", "Cynthia", "Kathleen", "Amy", "Angela",
    "Shirley", "Anna", "Brenda", "Pamela", "Nicole", "Ruth", "Katherine", "Samantha",
    "Christine", "Emily", "Catherine", "Virginia", "Debra", "Rachel", "Carolyn", "Janet",
    "Maya", "Heather", "Diane", "Julie", "Joyce", "Victoria", "Kelly", "Christina",
    "Lauren", "Joan", "Evelyn", "Olivia", "Judith", "Megan", "Cheryl", "Martha",
    "Andrea", "Frances", "Hannah", "Jacqueline", "Ann", "Gloria", "Jean", "Kathryn",
    "Alice", "Teresa", "Sara", "Janice", "Doris", "Madison", "Julia", "Grace",
    "Judy", "Abigail", "Marie", "Denise", "Beverly", "Amber", "Theresa", "Marilyn",
    "Danielle", "Diana", "Brittany", "Natalie", "Sophia", "Rose", "Isabelle", "Alexis",
    "Kayla", "Charlotte", "Lori", "Tiffany", "Leonard", "Jared", "Colin", "Trevor",
    "Damian", "Miles", "Grant", "Felix", "Oscar", "Hugo", "Ivan", "Victor",
    "Leo", "Max", "Simon", "Marcus", "Lucas", "Owen", "Wyatt", "Chase",
    "Cole", "Blake", "Brett", "Drew", "Reid", "Troy", "Lance", "Wade",
    "Dale", "Ross", "Clay", "Kurt", "Neil", "Glen", "Todd", "Seth",
    "Shane", "Brent", "Craig", "Derek", "Dustin", "Evan", "Garrett", "Ian",
    "Isaac", "Levi", "Luke", "Micah", "Nolan", "Omar", "Preston", "Quentin",
    "Raymond", "Spencer", "Tanner", "Vance", "Xavier", "Zane", "Abel", "Amos",
    "Barry", "Cedric", "Clark", "Clifford", "Clinton", "Curtis", "Darius", "Darren",
    "Dexter", "Dominic", "Duane", "Earl", "Edgar", "Edmund", "Elliot", "Emmett",
    "Ernest", "Fabian", "Fernando", "Floyd", "Forrest", "Francis", "Franklin", "Frederick",
    "Gilbert", "Gordon", "Graham", "Gustavo", "Harvey", "Herbert", "Herman", "Hector",
    "Horace", "Ira", "Irving", "Jasper", "Jerome", "Julius", "Lamar", "Lionel",
    "Lloyd", "Lowell", "Luther", "Malcolm", "Manuel", "Marshall", "Martin", "Marvin",
    "Maurice", "Melvin", "Mitchell", "Morris", "Myron", "Nathaniel", "Norman", "Orlando",
    "Orville", "Otis", "Pablo", "Pedro", "Percy", "Phillip", "Quincy", "Ramon",
    "Randall", "Raul", "Reginald", "Rene", "Reuben", "Rex", "Ricardo", "Rodney",
    "Roland", "Rolando", "Roman", "Roosevelt", "Ruben", "Rudolph", "Rudy", "Rufus",
    "Salvador", "Santiago", "Saul", "Sergio", "Sheldon", "Sherman", "Sidney", "Solomon",
    "Stanley", "Stewart", "Sylvester", "Terrence", "Theodore", "Tobias", "Tomas", "Tony",
    "Tracy", "Vernon", "Virgil", "Wallace", "Warren", "Wendell", "Wesley", "Wilbur",
    "Wilfred", "Winston", "Woodrow", "Agnes", "Alberta", "Alexandra", "Alma", "Althea",
    "Amelia", "Annette", "Antoinette", "April", "Arlene", "Audrey", "Aurora", "Autumn",
    "Beatrice", "Belinda", "Bernadette", "Bernice", "Bertha", "Bessie", "Beth", "Bethany",
    "Beulah", "Bianca", "Blanche", "Bonnie", "Bridget", "Camille", "Candace", "Carla",
    "Carmen", "Carrie", "Cassandra", "Cecilia", "Celeste", "Celia", "Charlene", "Chelsea",
    "Cheri", "Chloe", "Clara", "Clarissa", "Claudia", "Colleen", "Connie", "Constance",
    "Cora", "Corinne", "Cristina", "Crystal", "Daisy", "Daphne", "Darlene", "Dawn",
    "Deanna", "Delia", "Della", "Delores", "Desiree", "Dina", "Dixie", "Dolores",
    "Dominique", "Dora", "Doreen", "Edith", "Edna", "Eileen", "Elaine", "Eleanor",
    "Elena", "Elisa", "Ella", "Ellen", "Eloise", "Elsa", "Elsie", "Erica",
    "Erin", "Esther", "Ethel", "Eula", "Eunice", "Faith", "Fannie", "Faye",
    "Felicia", "Fern", "Flo", "Florence", "Fran", "Francine", "Freda", "Gail",
    "Gayle", "Gena", "Geneva", "Genevieve", "Georgia", "Geraldine", "Gertrude", "Gina",
    "Ginger", "Gladys", "Glenda", "Greta", "Gretchen", "Gwen", "Gwendolyn", "Hallie",
    "Harriet", "Hattie", "Hazel", "Heidi", "Henrietta", "Hilda", "Holly", "Hope",
    "Ida", "Imogene", "Ingrid", "Irene", "Iris", "Irma", "Ivy", "Jackie",
    "Jan", "Jana", "Jane", "Janelle", "Janie", "Jasmine", "Jeanette", "Jeanne",
    "Jenna", "Jenny", "Jessie", "Jewell", "Jill", "Jo", "Joanna", "Joanne",
    "Jodi", "Jody", "Johanna", "Josephine", "Josie", "Joy", "Juanita", "Judi",
    "June", "Kara", "Kari", "Karla", "Kate", "Katie", "Kay", "Kaye",
    "Kelli", "Kellie", "Kendra", "Kerri", "Kerry", "Krista", "Kristi", "Kristin",
    "Kristina", "Kristine", "Lacey", "Lana", "Latoya", "Laurel", "Laurie", "Leah",
    "Leigh", "Lela", "Lena", "Leona", "Leslie", "Leticia", "Lillian", "Lillie",
    "Lily", "Lindsay", "Lindsey", "Lois", "Lola", "Lorena", "Lorene", "Loretta",
    "Lorraine", "Lottie", "Lucia", "Lucille", "Lucinda", "Lucy", "Lula", "Luz",
    "Lydia", "Lynette", "Lynn", "Mabel", "Madeline", "Mae", "Maggie", "Mamie",
    "Mandy", "Marcella", "Marcia", "Margarita", "Margie", "Marguerite", "Marian", "Marianne",
};

const char* const kFillerNames[] = {
    "Marion", "Marjorie", "Marlene", "Marsha", "Marta", "Maureen", "Maxine", "Meghan",
    "Melanie", "Melinda", "Melody", "Mercedes", "Meredith", "Mia", "Mildred", "Mindy",
    "Minnie", "Miriam", "Misty", "Mollie", "Molly", "Mona", "Monica", "Monique",
    "Muriel", "Myra", "Myrtle", "Nadine", "Naomi", "Nell", "Nellie", "Nettie",
    "Nichole", "Nina", "Nora", "Norma", "Odessa", "Olga", "Opal", "Ophelia",
    "Paige", "Patrice", "Patsy", "Paula", "Paulette", "Pauline", "Pearl", "Peggy",
    "Penny", "Petra", "Phoebe", "Phyllis", "Polly", "Priscilla", "Queen", "Ramona",
    "Reba", "Regina", "Renee", "Rhoda", "Rhonda", "Rita", "Roberta", "Robin",
    "Rochelle", "Rosa", "Rosalie", "Rosemarie", "Rosemary", "Rosie", "Roxanne", "Ruby",
    "Sabrina", "Sadie", "Sally", "Salma", "Sandy", "Selena", "Selma", "Serena",
    "Shannon", "Shari", "Shawna", "Sheila", "Shelby", "Shelia", "Shelley", "Shelly",
    "Sheree", "Sheri", "Sherri", "Sherry", "Sheryl", "Silvia", "Sonia", "Sonja",
    "Sonya", "Sophie", "Stacey", "Staci",
};

const char* const kRelationNames[] = {
    "instructor", "teacher", "ruler", "advisor", "supervisor", "leader", "manager", "director",
    "patron", "mentor", "administrator", "coordinator", "tutor", "predecessor", "sponsor", "financier",
    "backer", "overseer", "employer", "boss",
};

} // namespace

std::span<const char* const> entity_namespace() {
    return {kEntityNames, std::size(kEntityNames)};
}

std::span<const char* const> filler_namespace() {
    return {kFillerNames, std::size(kFillerNames)};
}

std::span<const char* const> relation_namespace() {
    return {kRelationNames, std::size(kRelationNames)};
}

} // namespace khop
