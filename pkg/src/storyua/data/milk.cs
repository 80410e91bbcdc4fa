# Jim set the milk on the table: hypotheses, hard groups and soft constraints
var 1 "set = place"
var 2 "set = jell"
var 3 "milk = glass of milk"
var 4 "milk = milk by itself"
var 5 "table = dining table"
var 6 "table = desk"
var 7 "table = table in a document"
var 8 "Jim is thirsty"
var 9 "Jim wants to drink"
var 10 "Jim is hungry"
var 11 "It is mealtime"
var 12 "Jim wants to eat meal"
var 13 "Jim wants to do something strange"
var 14 "Table is in kitchen"
var 15 "Table is in dining room"
var 16 "Table is in office"
# one sense per word
hard xor(1,2)
hard xor(3,4)
hard xor(5,6,7)
# one goal
hard xor(9,12,13)
# one location
hard xor(14,15,16)
soft 1 and(1,3,5,12)
soft 1 and(1,3,or(5,6),9)
soft 1 and(2,4,5,13)
soft 1 and(8,9)
soft 1 and(or(10,11),12)
soft 1 and(5,14)
soft 1 and(5,15)
soft 1 and(6,16)
